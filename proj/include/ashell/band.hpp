#pragma once

#include <vector>

#include "ashell/bvh.hpp"
#include "ashell/render.hpp"
#include "ashell/shell.hpp"

namespace ashell {

struct SamplingParams {
    double delta_s = 0.01;  ///< target spacing between samples
    double w_s = 0.02;      ///< intervals narrower than this get one sample
    int n_max = 16;         ///< per-interval sample cap
    int dp_max = 20;        ///< at most this many outer hits are processed

    void validate() const;
};

/// min(ceil(max(w - w_s, 0) / delta_s) + 1, n_max). Throws DomainError for w < 0 or NaN.
int interval_sample_count(double w, const SamplingParams& p);

struct BandInterval {
    double enter = 0.0;
    double exit = 0.0;
    std::size_t first = 0;  ///< index of its first tau
    std::size_t count = 0;  ///< number of taus
};

struct BandSamples {
    std::vector<double> taus;  ///< ascending
    std::vector<BandInterval> intervals;
    bool terminated_at_inner = false;
};

/// Places samples inside the outer-shell intervals of a ray. Each interval gets
/// the N interior points of an (N + 2)-point uniform partition of [enter, exit].
/// The first Entering inner hit clips its interval and ends the walk. A leading
/// Exiting hit opens at ray.t_near; a second Entering closes the open interval
/// and starts a new one; a trailing Entering is dropped.
BandSamples narrow_band_samples(const std::vector<Hit>& outer_hits, const std::vector<Hit>& inner_hits,
                                const Ray& ray, const SamplingParams& p);

/// Ray plan for a set of band intervals. Each interval is bracketed by two
/// distance-only probes at enter and exit; its segments run enter -> tau_1 ->
/// ... -> tau_N -> exit, end segments colored by the adjacent tau and inner
/// segments by the mean of their taus. A single-sample interval becomes one
/// segment (enter, exit) colored by its center sample.
RayPlan band_plan(const BandSamples& samples);

/// Acceleration structures for both shell boundaries.
class ShellTracer {
public:
    ShellTracer() = default;
    explicit ShellTracer(const Shell& shell) : outer_(shell.outer), inner_(shell.inner) {}
    ShellTracer(TriMesh outer, TriMesh inner) : outer_(std::move(outer)), inner_(std::move(inner)) {}

    BandSamples samples(const Ray& ray, const SamplingParams& p) const;
    const Bvh& outer() const { return outer_; }
    const Bvh& inner() const { return inner_; }

private:
    Bvh outer_;
    Bvh inner_;
};

/// Narrow-band volume rendering: the field is evaluated only inside the shell.
/// Rays stopped at the inner boundary add no background.
RenderOutput render_band(const SceneField& scene, const ShellTracer& tracer, const Camera& cam,
                         const SamplingParams& p, const Vec3& background, const RenderOptions& opts = {});

}  // namespace ashell
