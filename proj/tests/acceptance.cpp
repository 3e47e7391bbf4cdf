// Acceptance harness: one PASS/FAIL line per criterion, non-zero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "ashell/app.hpp"
#include "ashell/error.hpp"
#include "ashell/levelset.hpp"
#include "ashell/marching_cubes.hpp"
#include "ashell/scene_io.hpp"
#include "support.hpp"

using namespace ashell;
using namespace ashell::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ScalarGrid kernel_grid(const GridField& g) {
    ScalarGrid s = g.channel_grid(Channel::LogS);
    for (double& v : s.values) v = std::exp(v);
    return s;
}

// ---------------------------------------------------------------------------

Outcome level_set_transport() {
    const ScalarGrid f = sphere_sdf(128, 0.5);
    const double h = f.layout.min_spacing();
    const auto t0 = Clock::now();
    const ScalarGrid out = evolve(f, ScalarGrid(f.layout, 0.02), EvolutionParams{50, 0.1, 0.1, 0.0}, 1);
    const double secs = seconds_since(t0);
    const TriMesh m = marching_cubes(out, 0.0, 1);
    double sum = 0.0, lo = 1e9, hi = 0.0;
    for (const Vec3& v : m.vertices) {
        const double r = norm(v);
        sum += r;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    // Least-squares radius about the known center.
    const double mean = m.vertices.empty() ? 0.0 : sum / static_cast<double>(m.vertices.size());
    const bool ok = !m.vertices.empty() && std::abs(mean - 0.6) <= h && secs < 30.0;
    return {ok, fmt("radius %.5f (vertex range [%.5f, %.5f]), target 0.6 +/- %.4f, evolve %.2f s single-threaded",
                    mean, lo, hi, h, secs)};
}

// Along a ray, is the point at distance t inside the outer mesh (or within tol of its surface)?
bool inside_outer(const std::vector<Hit>& outer, bool origin_inside, double t, double tol) {
    bool inside = origin_inside;
    for (const Hit& o : outer) {
        if (std::abs(o.t - t) <= tol) return true;
        if (o.t < t) inside = !inside;
    }
    return inside;
}

Outcome clamp_and_nesting() {
    struct Case {
        const char* name;
        AnalyticScene scene;
    };
    std::vector<Case> cases;
    cases.push_back({"sharp sphere", sphere_scene(0.5, 1e-3)});
    cases.push_back({"fuzzy sphere", sphere_scene(0.5, 0.1)});
    cases.push_back({"two spheres", two_sphere_scene()});
    {
        TorusShape t;
        t.major_radius = 0.5;
        t.minor_radius = 0.2;
        t.material.kernel_size = 0.01;
        cases.push_back({"torus", AnalyticScene(SceneNode{t}, kUnitBox)});
    }
    {
        BoxShape b;
        b.half_size = {0.45, 0.45, 0.45};
        b.material.kernel_size = 0.02;
        SphereShape s;
        s.radius = 0.6;
        s.material.kernel_size = 0.02;
        CsgNode i;
        i.op = CsgNode::Op::Intersection;
        i.children = {SceneNode{b}, SceneNode{s}};
        cases.push_back({"rounded box", AnalyticScene(SceneNode{i}, kUnitBox)});
    }

    bool ok = true;
    std::string detail;
    for (const Case& c : cases) {
        const GridLayout l = cube_layout(64);
        const double h = l.min_spacing();
        const GridField baked = bake_grid(c.scene, l, 0);
        const ScalarGrid f0 = baked.channel_grid(Channel::F);
        const Shell shell = extract_shell(f0, kernel_grid(baked), ShellParams{}, 0);
        std::size_t clamp_bad = 0;
        for (std::size_t v = 0; v < f0.values.size(); ++v) {
            if (!(shell.sdf_plus.values[v] <= f0.values[v] && f0.values[v] <= shell.sdf_minus.values[v])) ++clamp_bad;
        }
        const Bvh outer(shell.outer), inner(shell.inner);
        std::mt19937_64 rng(99);
        std::size_t nest_bad = 0, inner_hits = 0;
        const Vec3 origin{0.0131, -0.0077, 0.0049};
        const bool origin_inside = shell.sdf_plus.sample(origin) < 0.0;
        for (int i = 0; i < 1000; ++i) {
            Ray r;
            r.o = origin;
            r.d = random_direction(rng);
            const auto ho = outer.cast_all_hits(r);
            for (const Hit& hi : inner.cast_all_hits(r)) {
                ++inner_hits;
                if (!inside_outer(ho, origin_inside, hi.t, h)) ++nest_bad;
            }
        }
        ok = ok && clamp_bad == 0 && nest_bad == 0 && !shell.outer.empty();
        detail += fmt("%s: clamp violations %zu, nesting violations %zu/%zu; ", c.name, clamp_bad, nest_bad,
                      inner_hits);
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

Outcome shell_adaptivity() {
    const AnalyticScene scene = two_sphere_scene();
    const GridLayout l = cube_layout(128);
    const GridField baked = bake_grid(scene, l, 0);
    const Shell shell = extract_shell(baked.channel_grid(Channel::F), kernel_grid(baked), ShellParams{}, 0);
    double mean[2] = {0.0, 0.0};
    for (int which = 0; which < 2; ++which) {
        const Vec3 c{which == 0 ? -0.5 : 0.5, 0.0, 0.0};
        std::mt19937_64 rng(1);
        double sum = 0.0;
        const int n = 500;
        for (int i = 0; i < n; ++i) {
            Vec3 d = random_direction(rng);
            // Probe the hemisphere facing away from the other sphere.
            if ((which == 0 && d.x > 0.0) || (which == 1 && d.x < 0.0)) d.x = -d.x;
            sum += zero_crossing(shell.sdf_plus, c, d, 0.8, 0.001) - zero_crossing(shell.sdf_minus, c, d, 0.8, 0.001);
        }
        mean[which] = sum / n;
    }
    const double ratio = mean[1] / mean[0];
    return {ratio >= 3.0, fmt("mean thickness sharp %.4f, fuzzy %.4f, ratio %.2f (need >= 3)", mean[0], mean[1], ratio)};
}

Outcome sampling_formula() {
    struct Row {
        double w, w_s, delta_s;
        int n_max, expected;
    };
    // The three worked examples with the default spacing and threshold.
    std::vector<Row> rows{{0.05, 0.02, 0.01, 16, 4}, {0.015, 0.02, 0.01, 16, 1}, {1.0, 0.02, 0.01, 16, 16}};
    std::mt19937_64 rng(2024);
    while (rows.size() < 50) {
        // Work in units of 1/2000 with an odd numerator so the quotient is never an integer.
        const long w = 2 * static_cast<long>(rng() % 1000) + 1;
        const long ws = 2 * static_cast<long>(rng() % 60);
        const long ds = 2 * (1 + static_cast<long>(rng() % 40));
        const int n_max = 1 + static_cast<int>(rng() % 32);
        const long excess = std::max(w - ws, 0L);
        const long n = (excess + ds - 1) / ds + 1;
        rows.push_back({w / 2000.0, ws / 2000.0, ds / 2000.0, n_max, static_cast<int>(std::min<long>(n, n_max))});
    }
    std::size_t count_bad = 0;
    for (const Row& r : rows) {
        SamplingParams p;
        p.w_s = r.w_s;
        p.delta_s = r.delta_s;
        p.n_max = r.n_max;
        if (interval_sample_count(r.w, p) != r.expected) ++count_bad;
    }

    double worst = 0.0;
    std::size_t placement_bad = 0;
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        const double a = u(rng), w = 0.001 + 0.5 * u(rng) / 3.0;
        const std::vector<Hit> outer{{a, HitFlag::Entering, 0}, {a + w, HitFlag::Exiting, 1}};
        Ray ray;
        ray.d = {0.0, 0.0, 1.0};
        const BandSamples s = narrow_band_samples(outer, {}, ray, SamplingParams{});
        const int n = interval_sample_count(w, SamplingParams{});
        if (static_cast<int>(s.taus.size()) != n) {
            ++placement_bad;
            continue;
        }
        for (int k = 0; k < n; ++k) {
            const double ref = a + w * (k + 1) / (n + 1);
            worst = std::max(worst, std::abs(s.taus[k] - ref));
        }
    }
    const bool ok = count_bad == 0 && placement_bad == 0 && worst <= 1e-12;
    return {ok, fmt("%zu/%zu counts wrong (3 worked examples + %zu random tuples), %zu placement mismatches, worst "
                    "tau error %.2e",
                    count_bad, rows.size(), rows.size() - 3, placement_bad, worst)};
}

Outcome band_fidelity() {
    const AnalyticScene scene = sphere_scene(0.5, 1e-3);
    Camera cam;
    cam.width = cam.height = 128;
    const auto t0 = Clock::now();
    const RenderOutput full = render_full(scene, cam, 1024, {}, {0});
    const double t_full = seconds_since(t0);
    const auto t1 = Clock::now();
    const ShellTracer tracer(scene_shell(scene, 128, ShellParams{}, 0));
    const double t_shell = seconds_since(t1);
    const auto t2 = Clock::now();
    const RenderOutput band = render_band(scene, tracer, cam, SamplingParams{}, {}, {0});
    const double t_band = seconds_since(t2);
    const double p = psnr(full.image, band.image);
    const bool ok = p >= 40.0 && band.mean_samples <= full.mean_samples / 5.0 && seconds_since(t0) < 60.0;
    return {ok, fmt("PSNR %.2f dB (need >= 40), mean samples band %.3f vs full %.0f (ratio %.1f, need >= 5), "
                    "full %.2f s, shell %.2f s, band %.2f s",
                    p, band.mean_samples, full.mean_samples, full.mean_samples / band.mean_samples, t_full, t_shell,
                    t_band)};
}

std::vector<Hit> brute_force(const TriMesh& m, const Ray& r) {
    std::vector<Hit> raw;
    for (std::uint32_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tri = m.triangles[t];
        if (auto h = intersect_triangle(r, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]], r.t_near,
                                        r.t_far)) {
            h->triangle = t;
            raw.push_back(*h);
        }
    }
    return merge_hits(std::move(raw));
}

Outcome trace_equivalence() {
    std::vector<std::pair<const char*, TriMesh>> meshes;
    meshes.emplace_back("sphere", marching_cubes(sphere_sdf(48, 0.5), 0.0, 0));
    {
        TorusShape t;
        t.minor_radius = 0.2;
        const AnalyticScene torus(SceneNode{t}, kUnitBox);
        meshes.emplace_back("torus", marching_cubes(bake_grid(torus, cube_layout(48), 0).channel_grid(Channel::F)));
    }
    meshes.emplace_back(
        "two spheres", marching_cubes(bake_grid(two_sphere_scene(), cube_layout(40), 0).channel_grid(Channel::F)));
    bool ok = true;
    std::string detail;
    for (const auto& [name, mesh] : meshes) {
        const Bvh bvh(mesh);
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        std::size_t bad = 0, hits = 0;
        for (int i = 0; i < 1000; ++i) {
            Ray r;
            r.o = {u(rng), u(rng), u(rng)};
            r.d = random_direction(rng);
            const auto a = bvh.cast_all_hits(r);
            const auto b = brute_force(mesh, r);
            hits += b.size();
            bool same = a.size() == b.size();
            for (std::size_t k = 0; same && k < a.size(); ++k)
                same = std::abs(a[k].t - b[k].t) <= 1e-9 && a[k].flag == b[k].flag;
            bad += !same;
        }
        ok = ok && bad == 0;
        detail += fmt("%s (%zu triangles): %zu/1000 rays differ, %zu hits; ", name, mesh.triangles.size(), bad, hits);
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

// Constant-density slab along +z: f falls linearly so each segment's opacity is 1 - exp(-sigma delta).
class Medium final : public SceneField {
public:
    explicit Medium(double sigma) : sigma_(sigma) {}
    FieldSample eval(const Vec3& x, const Vec3&) const override {
        FieldSample fs;
        fs.f = -50.0 - sigma_ * (x.z + 1.0);
        fs.s = 1.0;
        fs.c = {1.0, 1.0, 1.0};
        fs.n = {0.0, 0.0, 1.0};
        return fs;
    }
    Aabb domain() const override { return kUnitBox; }

private:
    double sigma_;
};

Outcome homogeneous_medium() {
    bool ok = true;
    std::string detail;
    Camera cam;
    cam.position = {0.0, 0.0, -3.0};
    cam.look_at = {0.0, 0.0, 0.0};
    cam.width = cam.height = 1;
    const double length = 2.0;
    for (double sigma_l : {0.5, 1.0, 5.0}) {
        const int n = 1024;
        // Direct product of per-segment opacities.
        const std::vector<double> alphas(n, 1.0 - std::exp(-sigma_l / n));
        const std::vector<Vec3> colors(n, Vec3{1.0, 1.0, 1.0});
        const double t_direct = composite(alphas, colors).transmittance;
        // Through the renderer: 1025 probes spanning the slab, opacity from the SDF mapping.
        const Medium medium(sigma_l / length);
        const PlanFn plan = [&](std::size_t, const Ray& ray) {
            double t0 = 0.0, t1 = 0.0;
            clip_to_box(ray, kUnitBox, t0, t1);
            RayPlan p;
            for (int i = 0; i <= n; ++i) p.add_probe(t0 + (t1 - t0) * i / n, true);
            for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n); ++i) p.segments.push_back({i, i + 1, i, i + 1});
            return p;
        };
        const double t_render = render_planned(medium, cam, plan, {}, {1}).transmittance[0];
        const double exact = std::exp(-sigma_l);
        const double e1 = std::abs(t_direct - exact) / exact, e2 = std::abs(t_render - exact) / exact;
        ok = ok && e1 < 1e-3 && e2 < 1e-3;
        detail += fmt("sigma*L=%.1f: rel err composite %.1e, renderer %.1e; ", sigma_l, e1, e2);
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

Outcome gradient_check() {
    TrainConfig cfg;
    cfg.workers = 1;
    cfg.batch_rays = 8;
    cfg.samples_per_ray = 48;
    cfg.reg_points = 64;
    GridField field = initial_field(cube_layout(16), cfg);
    Rng rng(9);
    for (double& p : field.params) p += 0.05 * rng.normal();
    Camera cam;
    cam.width = cam.height = 16;
    TrainingView view{cam, Image(16, 16)};
    for (Vec3& c : view.image.pixels) c = {rng.uniform(), rng.uniform(), rng.uniform()};
    const RayPool pool = make_ray_pool(std::span<const TrainingView>(&view, 1));
    const Batch batch = make_batch(pool, field.layout.bounds(), cfg, TrainMode::FullRay, rng);

    std::vector<double> grad;
    evaluate_objective(field, batch, cfg, TrainMode::FullRay, &grad);
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (std::abs(grad[i]) >= 1e-7) live.push_back(i);
    if (live.empty()) return {false, "no parameter has a gradient"};
    double worst = 0.0;
    int bad = 0;
    int per_channel[kChannelCount] = {};
    const std::size_t nv = field.layout.vertex_count();
    for (int k = 0; k < 100; ++k) {
        const std::size_t i = live[rng.index(live.size())];
        ++per_channel[i / nv];
        const double h = 1e-4, orig = field.params[i];
        field.params[i] = orig + h;
        const double up = evaluate_objective(field, batch, cfg, TrainMode::FullRay).total;
        field.params[i] = orig - h;
        const double down = evaluate_objective(field, batch, cfg, TrainMode::FullRay).total;
        field.params[i] = orig;
        const double fd = (up - down) / (2.0 * h);
        const double rel = std::abs(fd - grad[i]) / std::max(std::abs(fd), std::abs(grad[i]));
        worst = std::max(worst, rel);
        bad += rel >= 1e-4;
    }
    return {bad == 0, fmt("100 parameters (f %d, log s %d, color %d, normal %d) of %zu with |grad| >= 1e-7: worst "
                          "relative error %.2e, %d above 1e-4",
                          per_channel[0], per_channel[1], per_channel[2] + per_channel[3] + per_channel[4],
                          per_channel[5] + per_channel[6] + per_channel[7], live.size(), worst, bad)};
}

Outcome two_stage_training() {
    const AnalyticScene scene = two_sphere_scene();
    TrainConfig cfg;
    cfg.learning_rate = 30.0;
    cfg.n1 = 2000;
    cfg.n2 = 200;
    cfg.batch_rays = 512;
    cfg.samples_per_ray = 64;
    cfg.reg_points = 256;
    std::vector<TrainingView> views;
    for (const Camera& cam : orbit_cameras(16, 3.0, 64, 64))
        views.push_back({cam, render_full(scene, cam, 64, {}, {0}).image});

    const auto t0 = Clock::now();
    std::optional<GridField> stage1_field;
    const TrainResult res = train_two_stage(views, cfg, cube_layout(32), [&](const TrainEvent& e) {
        if (e.stage == 1 && e.iteration == cfg.n1) stage1_field = e.state->field;
    });
    const double secs = seconds_since(t0);
    const ShellTracer tracer(res.shell);
    const double full_after = training_psnr(res.state.field, views, cfg);
    const double band_before = stage1_field ? training_psnr(*stage1_field, views, cfg, &tracer) : 0.0;

    const bool stage1_ok = res.psnr_stage1 >= 25.0;
    const bool stage2_ok = res.psnr_stage2 >= res.psnr_stage1 - 0.5;
    return {stage1_ok && stage2_ok && secs < 900.0,
            fmt("stage 1 full-ray PSNR %.2f dB (need >= 25: %s); stage 2 band PSNR %.2f dB vs stage 1 %.2f dB (need "
                "regression <= 0.5 dB: %s); band PSNR before stage 2 %.2f dB, full-ray after stage 2 %.2f dB; "
                "training %.0f s",
                res.psnr_stage1, stage1_ok ? "ok" : "no", res.psnr_stage2, res.psnr_stage1,
                stage2_ok ? "ok" : "no", band_before, full_after, secs)};
}

// ---------------------------------------------------------------------------

struct CliRun {
    int code = 0;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ashell");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, err.str()};
}

// Relative path -> bytes for every file below dir.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
    }
    return files;
}

Outcome cli_determinism() {
    const fs::path root = scratch_dir("acceptance_determinism");
    const fs::path scene = root / "scene.json";
    save_scene(scene, two_sphere_scene());
    const std::vector<std::string> base{"--scene", scene.string(), "--seed", "7", "--cameras", "2",
                                        "--width", "32", "--height", "32", "--grid-res", "48", "--samples", "96"};
    struct Cmd {
        std::string name;
        std::vector<std::string> extra;
    };
    const std::vector<Cmd> cmds{{"render-full", {}},
                                {"extract-shell", {}},
                                {"render-band", {}},
                                {"compare", {}},
                                {"train", {"--n1", "20", "--n2", "5", "--views", "3", "--train-grid-res", "12"}}};
    bool ok = true;
    std::string detail;
    for (const Cmd& c : cmds) {
        std::map<std::string, std::string> runs[3];
        const char* workers[3] = {"1", "1", "4"};
        bool ran = true;
        for (int k = 0; k < 3; ++k) {
            // One output path for every run, since the effective configuration records it.
            const fs::path out = root / c.name;
            fs::remove_all(out);
            std::vector<std::string> args{c.name};
            args.insert(args.end(), base.begin(), base.end());
            args.insert(args.end(), c.extra.begin(), c.extra.end());
            args.insert(args.end(), {"--out", out.string(), "--workers", workers[k]});
            const CliRun r = cli(args);
            ran = ran && r.code == 0;
            if (r.code != 0) detail += c.name + " failed: " + r.err;
            runs[k] = snapshot(out);
        }
        // The effective configuration records the worker count, so it is compared between equal-worker runs only.
        auto without_config = [](std::map<std::string, std::string> m) {
            m.erase("effective_config.json");
            return m;
        };
        const bool repeat = runs[0] == runs[1];
        const bool workers_same = without_config(runs[0]) == without_config(runs[2]);
        ok = ok && ran && repeat && workers_same && !runs[0].empty();
        detail += fmt("%s: %zu files, rerun %s, 1 vs 4 workers %s; ", c.name.c_str(), runs[0].size(),
                      repeat ? "identical" : "DIFFERENT", workers_same ? "identical" : "DIFFERENT");
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

}  // namespace

int main() {
    set_warning_sink([](const std::string&) {});
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"level-set transport", level_set_transport},
        {"clamp and nesting invariants", clamp_and_nesting},
        {"shell adaptivity", shell_adaptivity},
        {"sampling formula", sampling_formula},
        {"narrow-band fidelity and speedup", band_fidelity},
        {"ray-tracing oracle equivalence", trace_equivalence},
        {"homogeneous-medium transmittance", homogeneous_medium},
        {"gradient correctness", gradient_check},
        {"two-stage training", two_stage_training},
        {"CLI determinism", cli_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
