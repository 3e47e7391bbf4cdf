#include "ashell/band.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ashell/error.hpp"

namespace ashell {

void SamplingParams::validate() const {
    if (!(delta_s > 0.0)) throw ConfigError("delta_s must be > 0");
    if (!(w_s >= 0.0)) throw ConfigError("w_s must be >= 0");
    if (n_max < 1) throw ConfigError("n_max must be >= 1");
    if (dp_max < 1) throw ConfigError("dp_max must be >= 1");
}

int interval_sample_count(double w, const SamplingParams& p) {
    if (!(w >= 0.0)) throw DomainError("interval width must be >= 0");
    const double n = std::ceil(std::max(w - p.w_s, 0.0) / p.delta_s) + 1.0;
    return n >= p.n_max ? p.n_max : static_cast<int>(n);
}

namespace {

// Returns false once the walk must stop at the inner boundary.
bool add_interval(BandSamples& out, double enter, double exit, double inner_t, const SamplingParams& p) {
    bool stop = false;
    if (exit >= inner_t) {
        exit = inner_t;
        stop = true;
    }
    if (exit > enter) {
        const int n = interval_sample_count(exit - enter, p);
        BandInterval iv{enter, exit, out.taus.size(), static_cast<std::size_t>(n)};
        for (int i = 1; i <= n; ++i) {
            // interior points of linspace(enter, exit, n + 2)
            out.taus.push_back(enter + (exit - enter) * (static_cast<double>(i) / (n + 1)));
        }
        out.intervals.push_back(iv);
    }
    if (stop) out.terminated_at_inner = true;
    return !stop;
}

}  // namespace

BandSamples narrow_band_samples(const std::vector<Hit>& outer_hits, const std::vector<Hit>& inner_hits,
                                const Ray& ray, const SamplingParams& p) {
    p.validate();
    BandSamples out;
    double inner_t = std::numeric_limits<double>::infinity();
    for (const Hit& h : inner_hits) {
        if (h.flag == HitFlag::Entering) {
            inner_t = h.t;
            break;
        }
    }

    const std::size_t limit = std::min(outer_hits.size(), static_cast<std::size_t>(p.dp_max));
    bool open = false;
    double enter = 0.0;
    for (std::size_t i = 0; i < limit; ++i) {
        const Hit& h = outer_hits[i];
        if (h.flag == HitFlag::Entering) {
            if (open && !add_interval(out, enter, h.t, inner_t, p)) return out;
            if (h.t >= inner_t) {
                out.terminated_at_inner = true;
                return out;
            }
            open = true;
            enter = h.t;
        } else {
            if (!open) enter = ray.t_near;
            if (!add_interval(out, enter, h.t, inner_t, p)) return out;
            open = false;
        }
    }
    return out;
}

RayPlan band_plan(const BandSamples& samples) {
    RayPlan plan;
    plan.add_background = !samples.terminated_at_inner;
    for (const BandInterval& iv : samples.intervals) {
        const std::uint32_t enter = plan.add_probe(iv.enter, false);
        const auto first = static_cast<std::uint32_t>(plan.probe_t.size());
        for (std::size_t k = 0; k < iv.count; ++k) plan.add_probe(samples.taus[iv.first + k], true);
        const std::uint32_t exit = plan.add_probe(iv.exit, false);
        const auto last = static_cast<std::uint32_t>(first + iv.count - 1);
        if (iv.count == 1) {
            plan.segments.push_back({enter, exit, first, first});
            continue;
        }
        plan.segments.push_back({enter, first, first, first});
        for (std::uint32_t k = first; k < last; ++k) plan.segments.push_back({k, k + 1, k, k + 1});
        plan.segments.push_back({last, exit, last, last});
    }
    return plan;
}

BandSamples ShellTracer::samples(const Ray& ray, const SamplingParams& p) const {
    const std::vector<Hit> outer = outer_.cast_all_hits(ray);
    if (outer.empty()) {
        BandSamples none;
        return none;
    }
    return narrow_band_samples(outer, inner_.cast_all_hits(ray), ray, p);
}

RenderOutput render_band(const SceneField& scene, const ShellTracer& tracer, const Camera& cam,
                         const SamplingParams& p, const Vec3& background, const RenderOptions& opts) {
    p.validate();
    const PlanFn plan_for = [&](std::size_t, const Ray& ray) { return band_plan(tracer.samples(ray, p)); };
    return render_planned(scene, cam, plan_for, background, opts);
}

}  // namespace ashell
