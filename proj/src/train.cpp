#include "ashell/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ashell/error.hpp"
#include "ashell/field.hpp"
#include "ashell/parallel.hpp"

namespace ashell {

void TrainConfig::validate() const {
    if (!(lambda_c >= 0.0 && lambda_e >= 0.0 && lambda_n >= 0.0 && lambda_s >= 0.0)) {
        throw ConfigError("loss weights must be >= 0");
    }
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (learning_rate_band && !(*learning_rate_band >= 0.0)) throw ConfigError("band learning rate must be >= 0");
    if (n1 < 0 || n2 < 0) throw ConfigError("iteration counts must be >= 0");
    if (batch_rays < 1) throw ConfigError("batch_rays must be >= 1");
    if (samples_per_ray < 2) throw ConfigError("samples_per_ray must be >= 2");
    if (reg_points < 0) throw ConfigError("reg_points must be >= 0");
    if (fd_step && !(*fd_step > 0.0)) throw ConfigError("fd_step must be > 0");
    if (!(init_kernel_size > 0.0)) throw ConfigError("init_kernel_size must be > 0");
    shell.validate();
    sampling.validate();
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (spare_) {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 == 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

// ---------------------------------------------------------------------------
// Losses

double loss_color(std::span<const Vec3> rendered, std::span<const Vec3> target, bool l2) {
    if (rendered.size() != target.size()) throw DomainError("loss_color: rendered and target differ in length");
    if (rendered.empty()) throw DomainError("loss_color: empty batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        const Vec3 d = rendered[i] - target[i];
        sum += l2 ? norm(d) : std::abs(d.x) + std::abs(d.y) + std::abs(d.z);
    }
    return sum / static_cast<double>(rendered.size());
}

namespace {

double channel_at(const GridField& g, const TrilinearStencil& st, Channel c) { return st.apply(g.channel(c)); }

double f_at(const GridField& g, const Vec3& x) { return channel_at(g, trilinear_stencil(g.layout, x), Channel::F); }

double ls_at(const GridField& g, const Vec3& x) {
    return channel_at(g, trilinear_stencil(g.layout, x), Channel::LogS);
}

Vec3 axis_unit(int a) { return a == 0 ? Vec3{1, 0, 0} : a == 1 ? Vec3{0, 1, 0} : Vec3{0, 0, 1}; }

}  // namespace

Vec3 fd_gradient(const GridField& field, const Vec3& x, double fd_step) {
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
        const Vec3 e = axis_unit(a) * fd_step;
        g[a] = (f_at(field, x + e) - f_at(field, x - e)) / (2.0 * fd_step);
    }
    return g;
}

double loss_eikonal(const GridField& field, std::span<const Vec3> points, double fd_step) {
    if (!(fd_step > 0.0)) throw DomainError("loss_eikonal: fd_step must be > 0");
    if (points.empty()) return 0.0;
    double sum = 0.0;
    for (const Vec3& x : points) {
        const double d = norm(fd_gradient(field, x, fd_step)) - 1.0;
        sum += d * d;
    }
    return sum / static_cast<double>(points.size());
}

double loss_kernel_smooth(const GridField& field, std::span<const Vec3> points, std::span<const Vec3> offsets) {
    if (points.size() != offsets.size()) throw DomainError("loss_kernel_smooth: one offset per point required");
    if (points.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sum += std::abs(ls_at(field, points[i]) - ls_at(field, points[i] + offsets[i]));
    }
    return sum / static_cast<double>(points.size());
}

double loss_kernel_smooth(const GridField& field, std::span<const Vec3> points, double epsilon, Rng& rng) {
    if (!(epsilon > 0.0)) throw DomainError("loss_kernel_smooth: epsilon must be > 0");
    std::vector<Vec3> offsets(points.size());
    for (Vec3& o : offsets) o = Vec3{rng.normal(), rng.normal(), rng.normal()} * epsilon;
    return loss_kernel_smooth(field, points, offsets);
}

double loss_normal(const GridField& field, std::span<const Vec3> points, double fd_step) {
    if (!(fd_step > 0.0)) throw DomainError("loss_normal: fd_step must be > 0");
    if (points.empty()) return 0.0;
    double sum = 0.0;
    for (const Vec3& x : points) {
        const Vec3 g = fd_gradient(field, x, fd_step);
        const double len = norm(g);
        if (len < kGradientEpsilon) continue;
        const TrilinearStencil st = trilinear_stencil(field.layout, x);
        const Vec3 n{channel_at(field, st, Channel::NormalX), channel_at(field, st, Channel::NormalY),
                     channel_at(field, st, Channel::NormalZ)};
        sum += norm(n - g / len);
    }
    return sum / static_cast<double>(points.size());
}

double total_loss(const LossParts& p, const TrainConfig& cfg) {
    return cfg.lambda_c * p.color + cfg.lambda_e * p.eikonal + cfg.lambda_s * p.smooth + cfg.lambda_n * p.normal;
}

// ---------------------------------------------------------------------------
// Objective and gradient

namespace {

using SparseGrad = std::vector<std::pair<std::size_t, double>>;

void scatter(SparseGrad& out, const GridField& g, const TrilinearStencil& st, Channel c, double d) {
    if (d == 0.0) return;
    const std::size_t base = g.param_index(c, 0);
    for (int k = 0; k < 8; ++k) {
        if (st.weight[k] != 0.0) out.emplace_back(base + st.index[k], st.weight[k] * d);
    }
}

struct ProbeState {
    TrilinearStencil st;
    double f = 0.0, ls = 0.0, s = 1.0;
    Vec3 raw_c, c;
    double df = 0.0, dls = 0.0;
    Vec3 dc;
};

// Renders one ray and, when `grad` is set, appends d(weight * residual)/dparams.
Vec3 render_ray(const GridField& g, const Ray& ray, const RayPlan& plan, const Vec3& background,
                std::vector<ProbeState>& probes, const Vec3* target, double weight, bool l2, SparseGrad* grad) {
    probes.assign(plan.probe_t.size(), ProbeState{});
    for (std::size_t i = 0; i < probes.size(); ++i) {
        ProbeState& p = probes[i];
        p.st = trilinear_stencil(g.layout, ray.at(plan.probe_t[i]));
        p.f = channel_at(g, p.st, Channel::F);
        p.ls = channel_at(g, p.st, Channel::LogS);
        p.s = std::exp(p.ls);
        if (plan.needs_color[i]) {
            p.raw_c = {channel_at(g, p.st, Channel::ColorR), channel_at(g, p.st, Channel::ColorG),
                       channel_at(g, p.st, Channel::ColorB)};
            for (int k = 0; k < 3; ++k) p.c[k] = std::clamp(p.raw_c[k], 0.0, 1.0);
        }
    }

    const std::size_t m = plan.segments.size();
    thread_local std::vector<double> alpha, trans;
    thread_local std::vector<Vec3> col;
    alpha.resize(m);
    trans.resize(m);
    col.resize(m);
    Vec3 color;
    double t = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
        const auto& seg = plan.segments[j];
        const ProbeState& a = probes[seg.a];
        const ProbeState& b = probes[seg.b];
        alpha[j] = alpha_interval(a.f, a.s, b.f, b.s);
        col[j] = (probes[seg.color_a].c + probes[seg.color_b].c) * 0.5;
        trans[j] = t;
        color += col[j] * (t * alpha[j]);
        t *= 1.0 - alpha[j];
    }
    if (plan.add_background) color += background * t;
    if (!grad || !target) return color;

    const Vec3 r = color - *target;
    Vec3 dC;
    if (l2) {
        const double len = norm(r);
        if (len > 0.0) dC = r * (weight / len);
    } else {
        for (int k = 0; k < 3; ++k) dC[k] = r[k] > 0.0 ? weight : r[k] < 0.0 ? -weight : 0.0;
    }
    if (dC == Vec3{}) return color;

    // Q_j = alpha_j col_j + (1 - alpha_j) Q_{j+1}, seeded with the background term.
    Vec3 q = plan.add_background ? background : Vec3{};
    for (std::size_t jj = m; jj-- > 0;) {
        const auto& seg = plan.segments[jj];
        const double d_alpha = trans[jj] * dot(dC, col[jj] - q);
        const Vec3 d_col = dC * (trans[jj] * alpha[jj]);
        q = col[jj] * alpha[jj] + q * (1.0 - alpha[jj]);

        probes[seg.color_a].dc += d_col * 0.5;
        probes[seg.color_b].dc += d_col * 0.5;

        ProbeState& a = probes[seg.a];
        ProbeState& b = probes[seg.b];
        if (d_alpha == 0.0 || (a.f == b.f && a.s == b.s)) continue;
        const double ua = a.f / a.s, ub = b.f / b.s;
        const double d = log_sigmoid(ub) - log_sigmoid(ua);
        if (!(d < 0.0)) continue;  // clamped to zero opacity
        const double keep = std::exp(d);  // 1 - alpha
        const double du_a = d_alpha * keep * sigmoid(-ua);
        const double du_b = -d_alpha * keep * sigmoid(-ub);
        a.df += du_a / a.s;
        a.dls -= du_a * ua;
        b.df += du_b / b.s;
        b.dls -= du_b * ub;
    }

    for (ProbeState& p : probes) {
        scatter(*grad, g, p.st, Channel::F, p.df);
        scatter(*grad, g, p.st, Channel::LogS, p.dls);
        for (int k = 0; k < 3; ++k) {
            if (p.raw_c[k] < 0.0 || p.raw_c[k] > 1.0) continue;
            scatter(*grad, g, p.st, static_cast<Channel>(static_cast<int>(Channel::ColorR) + k), p.dc[k]);
        }
    }
    return color;
}

// Eikonal and normal terms at one point, weighted, with their gradients.
void regularize_point(const GridField& g, const Vec3& x, double h, double w_e, double w_n, LossParts& parts,
                      SparseGrad* grad) {
    TrilinearStencil plus[3], minus[3];
    Vec3 gf;
    for (int a = 0; a < 3; ++a) {
        const Vec3 e = axis_unit(a) * h;
        plus[a] = trilinear_stencil(g.layout, x + e);
        minus[a] = trilinear_stencil(g.layout, x - e);
        gf[a] = (channel_at(g, plus[a], Channel::F) - channel_at(g, minus[a], Channel::F)) / (2.0 * h);
    }
    const double len = norm(gf);
    parts.eikonal += (len - 1.0) * (len - 1.0);
    Vec3 dg;
    if (len > 0.0) dg = gf * (w_e * 2.0 * (len - 1.0) / len);

    if (len >= kGradientEpsilon) {
        const TrilinearStencil st = trilinear_stencil(g.layout, x);
        const Vec3 n{channel_at(g, st, Channel::NormalX), channel_at(g, st, Channel::NormalY),
                     channel_at(g, st, Channel::NormalZ)};
        const Vec3 unit = gf / len;
        const Vec3 r = n - unit;
        const double rl = norm(r);
        parts.normal += rl;
        if (grad && rl > 0.0) {
            const Vec3 dn = r * (w_n / rl);
            for (int k = 0; k < 3; ++k) {
                scatter(*grad, g, st, static_cast<Channel>(static_cast<int>(Channel::NormalX) + k), dn[k]);
            }
            const Vec3 du = -dn;
            dg += (du - unit * dot(unit, du)) / len;
        }
    }
    if (!grad) return;
    for (int a = 0; a < 3; ++a) {
        scatter(*grad, g, plus[a], Channel::F, dg[a] / (2.0 * h));
        scatter(*grad, g, minus[a], Channel::F, -dg[a] / (2.0 * h));
    }
}

}  // namespace

Evaluation evaluate_objective(const GridField& field, const Batch& batch, const TrainConfig& cfg, TrainMode mode,
                              std::vector<double>* grad) {
    const std::size_t n = batch.rays.size();
    if (n == 0 || batch.plans.size() != n || batch.targets.size() != n) {
        throw DomainError("evaluate_objective: batch needs one plan and target per ray");
    }
    const bool full = mode == TrainMode::FullRay;
    if (full && batch.offsets.size() != batch.points.size()) {
        throw DomainError("evaluate_objective: one perturbation per regularizer point required");
    }

    Evaluation ev;
    ev.rendered.resize(n);
    const double w_c = cfg.lambda_c / static_cast<double>(n);
    std::vector<SparseGrad> per_ray(grad ? n : 0);
    parallel_for(n, cfg.workers, [&](std::size_t r) {
        thread_local std::vector<ProbeState> probes;
        ev.rendered[r] = render_ray(field, batch.rays[r], batch.plans[r], cfg.background, probes, &batch.targets[r],
                                    w_c, cfg.l2_color, grad ? &per_ray[r] : nullptr);
    });
    ev.parts.color = loss_color(ev.rendered, batch.targets, cfg.l2_color);

    SparseGrad reg;
    if (full && !batch.points.empty()) {
        const double h = cfg.fd_step.value_or(field.layout.min_spacing());
        const double inv = 1.0 / static_cast<double>(batch.points.size());
        const double w_e = cfg.lambda_e * inv, w_n = cfg.lambda_n * inv, w_s = cfg.lambda_s * inv;
        for (std::size_t i = 0; i < batch.points.size(); ++i) {
            const Vec3& x = batch.points[i];
            regularize_point(field, x, h, w_e, w_n, ev.parts, grad ? &reg : nullptr);
            const TrilinearStencil s0 = trilinear_stencil(field.layout, x);
            const TrilinearStencil s1 = trilinear_stencil(field.layout, x + batch.offsets[i]);
            const double diff = channel_at(field, s0, Channel::LogS) - channel_at(field, s1, Channel::LogS);
            ev.parts.smooth += std::abs(diff);
            if (grad && diff != 0.0) {
                const double d = diff > 0.0 ? w_s : -w_s;
                scatter(reg, field, s0, Channel::LogS, d);
                scatter(reg, field, s1, Channel::LogS, -d);
            }
        }
        ev.parts.eikonal *= inv;
        ev.parts.normal *= inv;
        ev.parts.smooth *= inv;
    }
    ev.total = total_loss(ev.parts, cfg);

    if (grad) {
        grad->assign(field.params.size(), 0.0);
        for (const SparseGrad& sg : per_ray) {
            for (const auto& [i, v] : sg) (*grad)[i] += v;
        }
        for (const auto& [i, v] : reg) (*grad)[i] += v;
    }
    return ev;
}

Evaluation gradient_step(TrainState& state, const Batch& batch, const TrainConfig& cfg, TrainMode mode) {
    std::vector<double> grad;
    Evaluation ev = evaluate_objective(state.field, batch, cfg, mode, &grad);
    const std::size_t nv = state.field.layout.vertex_count();
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!std::isfinite(grad[i])) {
            const auto ijk = state.field.layout.unindex(i % nv);
            std::ostringstream msg;
            msg << "non-finite gradient at step " << state.iteration << ": channel " << i / nv << " vertex (" << ijk[0]
                << ',' << ijk[1] << ',' << ijk[2] << ")";
            throw NumericalError(msg.str());
        }
    }
    const double eta = mode == TrainMode::NarrowBand ? cfg.learning_rate_band.value_or(cfg.learning_rate)
                                                     : cfg.learning_rate;
    for (std::size_t i = 0; i < grad.size(); ++i) state.field.params[i] -= eta * grad[i];
    ++state.iteration;
    state.loss_history.push_back(ev.total);
    return ev;
}

// ---------------------------------------------------------------------------
// Data and driver

RayPool make_ray_pool(std::span<const TrainingView> views) {
    RayPool pool;
    for (const TrainingView& v : views) {
        if (v.image.width != v.camera.width || v.image.height != v.camera.height) {
            throw ConfigError("training image size does not match its camera");
        }
        const std::vector<Ray> rays = generate_rays(v.camera);
        pool.rays.insert(pool.rays.end(), rays.begin(), rays.end());
        pool.colors.insert(pool.colors.end(), v.image.pixels.begin(), v.image.pixels.end());
    }
    return pool;
}

RayPlan full_plan(const Ray& ray, const Aabb& domain, int samples) {
    double t0 = 0.0, t1 = 0.0;
    if (!clip_to_box(ray, domain, t0, t1)) return RayPlan{};
    return dense_plan(t0, t1, samples);
}

Batch make_batch(const RayPool& pool, const Aabb& domain, const TrainConfig& cfg, TrainMode mode, Rng& rng,
                 const std::vector<BandSamples>* band) {
    if (pool.rays.empty()) throw ConfigError("no training rays");
    if (mode == TrainMode::NarrowBand && (!band || band->size() != pool.rays.size())) {
        throw ConfigError("narrow-band batches need band samples for every training ray");
    }
    Batch b;
    b.rays.reserve(static_cast<std::size_t>(cfg.batch_rays));
    for (int i = 0; i < cfg.batch_rays; ++i) {
        const std::size_t r = rng.index(pool.rays.size());
        b.rays.push_back(pool.rays[r]);
        b.targets.push_back(pool.colors[r]);
        b.plans.push_back(mode == TrainMode::FullRay ? full_plan(pool.rays[r], domain, cfg.samples_per_ray)
                                                     : band_plan((*band)[r]));
    }
    if (mode == TrainMode::NarrowBand || cfg.reg_points == 0) return b;

    std::vector<Vec3> candidates;
    for (std::size_t r = 0; r < b.rays.size(); ++r) {
        for (double t : b.plans[r].probe_t) candidates.push_back(b.rays[r].at(t));
    }
    if (candidates.empty()) return b;
    for (int i = 0; i < cfg.reg_points; ++i) {
        b.points.push_back(candidates[rng.index(candidates.size())]);
        b.offsets.push_back(Vec3{rng.normal(), rng.normal(), rng.normal()} * cfg.epsilon);
    }
    return b;
}

GridField initial_field(const GridLayout& layout, const TrainConfig& cfg) {
    layout.validate();
    GridField g(layout);
    const Vec3 center = layout.bounds().center();
    const double ls = std::log(cfg.init_kernel_size);
    for (int k = 0; k < layout.res[2]; ++k) {
        for (int j = 0; j < layout.res[1]; ++j) {
            for (int i = 0; i < layout.res[0]; ++i) {
                const std::size_t v = layout.index(i, j, k);
                const Vec3 d = layout.position(i, j, k) - center;
                const Vec3 n = normalized(d);
                g.params[g.param_index(Channel::F, v)] = norm(d) - cfg.init_radius;
                g.params[g.param_index(Channel::LogS, v)] = ls;
                for (int c = 0; c < 3; ++c) {
                    g.params[g.param_index(static_cast<Channel>(static_cast<int>(Channel::ColorR) + c), v)] =
                        cfg.init_color;
                    g.params[g.param_index(static_cast<Channel>(static_cast<int>(Channel::NormalX) + c), v)] = n[c];
                }
            }
        }
    }
    return g;
}

double training_psnr(const GridField& field, std::span<const TrainingView> views, const TrainConfig& cfg,
                     const ShellTracer* tracer) {
    if (views.empty()) throw ConfigError("no training views");
    const GridScene scene(std::make_shared<const GridField>(field));
    RenderOptions opts;
    opts.workers = cfg.workers;
    double sq = 0.0;
    std::size_t count = 0;
    for (const TrainingView& v : views) {
        const RenderOutput out = tracer ? render_band(scene, *tracer, v.camera, cfg.sampling, cfg.background, opts)
                                        : render_full(scene, v.camera, cfg.samples_per_ray, cfg.background, opts);
        for (std::size_t i = 0; i < out.image.pixels.size(); ++i) {
            const Vec3 d = out.image.pixels[i] - v.image.pixels[i];
            sq += dot(d, d);
        }
        count += 3 * out.image.pixels.size();
    }
    const double mse = sq / static_cast<double>(count);
    return mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
}

namespace {

Shell shell_of(const GridField& field, const ShellParams& p, unsigned workers) {
    ScalarGrid s = field.channel_grid(Channel::LogS);
    for (double& v : s.values) v = std::exp(v);
    return extract_shell(field.channel_grid(Channel::F), s, p, workers);
}

}  // namespace

TrainResult train_two_stage(std::span<const TrainingView> views, const TrainConfig& cfg, const GridLayout& layout,
                            const std::function<void(const TrainEvent&)>& on_step) {
    cfg.validate();
    if (views.empty()) throw ConfigError("training needs at least one target view");
    const RayPool pool = make_ray_pool(views);
    const Aabb domain = layout.bounds();
    Rng rng(cfg.rng_seed);

    TrainResult result;
    result.state.field = initial_field(layout, cfg);
    TrainState& state = result.state;

    for (int i = 0; i < cfg.n1; ++i) {
        const Batch batch = make_batch(pool, domain, cfg, TrainMode::FullRay, rng);
        const Evaluation ev = gradient_step(state, batch, cfg, TrainMode::FullRay);
        if (on_step) on_step({1, state.iteration, ev.parts, ev.total, &state});
    }
    result.psnr_stage1 = training_psnr(state.field, views, cfg);

    result.shell = shell_of(state.field, cfg.shell, cfg.workers);
    const ShellTracer tracer(result.shell);
    std::vector<BandSamples> band(pool.rays.size());
    parallel_for(pool.rays.size(), cfg.workers, [&](std::size_t r) { band[r] = tracer.samples(pool.rays[r], cfg.sampling); });

    for (int i = 0; i < cfg.n2; ++i) {
        const Batch batch = make_batch(pool, domain, cfg, TrainMode::NarrowBand, rng, &band);
        const Evaluation ev = gradient_step(state, batch, cfg, TrainMode::NarrowBand);
        if (on_step) on_step({2, state.iteration, ev.parts, ev.total, &state});
    }
    result.psnr_stage2 = training_psnr(state.field, views, cfg, &tracer);
    return result;
}

}  // namespace ashell
