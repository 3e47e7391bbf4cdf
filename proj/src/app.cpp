#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

#include <json.hpp>

#include "ashell/app.hpp"
#include "ashell/error.hpp"
#include "ashell/scene_io.hpp"

namespace ashell {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
    if (is_infinite_psnr(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

json num_json(double v) { return is_infinite_psnr(v) ? json("inf") : json(v); }

std::string indexed(const char* stem, std::size_t i, const char* ext = ".ppm") {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%02zu%s", stem, i, ext);
    return buf;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

// Validates, creates the output directory and records the effective configuration.
AnalyticScene prepare(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.scene.empty()) throw ConfigError("no scene file given (use --scene or the 'scene' key)");
    AnalyticScene scene = load_scene(cfg.scene);
    make_dir(cfg.out);
    write_text(fs::path(cfg.out) / "effective_config.json", run_config_to_string(cfg));
    return scene;
}

RenderOptions render_options(const RunConfig& cfg) {
    RenderOptions o;
    o.workers = cfg.workers;
    return o;
}

struct SampleTally {
    double samples = 0.0;
    double rays = 0.0;
    void add(const RenderOutput& r) {
        for (int n : r.samples_per_ray) samples += n;
        rays += static_cast<double>(r.samples_per_ray.size());
    }
    double mean() const { return rays > 0.0 ? samples / rays : 0.0; }
};

struct Renders {
    std::vector<Image> images;
    std::vector<RenderOutput> outputs;
    SampleTally tally;
};

Renders render_all_full(const SceneField& scene, const std::vector<Camera>& cams, const RunConfig& cfg) {
    Renders r;
    for (const Camera& cam : cams) {
        RenderOutput o = render_full(scene, cam, cfg.samples, cfg.background, render_options(cfg));
        r.tally.add(o);
        r.images.push_back(o.image);
        r.outputs.push_back(std::move(o));
    }
    return r;
}

Renders render_all_band(const SceneField& scene, const ShellTracer& tracer, const std::vector<Camera>& cams,
                        const RunConfig& cfg) {
    Renders r;
    for (const Camera& cam : cams) {
        RenderOutput o = render_band(scene, tracer, cam, cfg.sampling, cfg.background, render_options(cfg));
        r.tally.add(o);
        r.images.push_back(o.image);
        r.outputs.push_back(std::move(o));
    }
    return r;
}

Shell shell_for(const RunConfig& cfg, const AnalyticScene& scene, std::ostream& log) {
    if (!cfg.shell_dir.empty()) return load_shell(cfg.shell_dir);
    log << "extracting shell inline at grid " << cfg.grid_res << "^3\n";
    return scene_shell(scene, cfg.grid_res, cfg.shell, cfg.workers);
}

}  // namespace

Shell scene_shell(const SceneField& scene, int grid_res, const ShellParams& p, unsigned workers) {
    GridLayout layout;
    const Aabb box = scene.domain();
    layout.origin = box.lo;
    layout.extent = box.size();
    layout.res = {grid_res, grid_res, grid_res};
    layout.validate();
    const GridField baked = bake_grid(scene, layout, workers);
    ScalarGrid s = baked.channel_grid(Channel::LogS);
    for (double& v : s.values) v = std::exp(v);
    return extract_shell(baked.channel_grid(Channel::F), s, p, workers);
}

double psnr_all(const std::vector<Image>& a, const std::vector<Image>& b) {
    if (a.size() != b.size()) throw DomainError("psnr_all: image counts differ");
    Image ca, cb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].width != b[i].width || a[i].height != b[i].height) throw DomainError("psnr_all: image sizes differ");
        ca.pixels.insert(ca.pixels.end(), a[i].pixels.begin(), a[i].pixels.end());
        cb.pixels.insert(cb.pixels.end(), b[i].pixels.begin(), b[i].pixels.end());
    }
    ca.width = cb.width = static_cast<int>(ca.pixels.size());
    ca.height = cb.height = 1;
    return psnr(ca, cb);
}

RenderSummary cmd_render_full(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = Clock::now();
    const AnalyticScene scene = prepare(cfg);
    const auto cams = cfg.cameras.cameras(scene.domain().center());
    const Renders r = render_all_full(scene, cams, cfg);
    RenderSummary sum;
    for (std::size_t i = 0; i < r.images.size(); ++i) {
        const fs::path p = fs::path(cfg.out) / indexed("full", i);
        write_ppm(p, r.images[i], cfg.ppm_bits);
        sum.images.push_back(p);
    }
    sum.mean_samples = r.tally.mean();
    log << "render-full: images " << sum.images.size() << " mean_samples " << num(sum.mean_samples) << " wall_s "
        << num(seconds_since(t0)) << '\n';
    return sum;
}

ShellSummary cmd_extract_shell(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = Clock::now();
    const AnalyticScene scene = prepare(cfg);
    const Shell shell = scene_shell(scene, cfg.grid_res, cfg.shell, cfg.workers);
    if (shell.outer.empty()) warn("extracted shell is empty (the scene has no surface inside the grid)");
    ShellSummary sum;
    sum.dir = fs::path(cfg.out) / "shell";
    save_shell(sum.dir, shell);
    sum.outer_vertices = shell.outer.vertices.size();
    sum.outer_triangles = shell.outer.triangles.size();
    sum.inner_vertices = shell.inner.vertices.size();
    sum.inner_triangles = shell.inner.triangles.size();
    log << "extract-shell: outer " << sum.outer_vertices << " vertices " << sum.outer_triangles << " triangles, inner "
        << sum.inner_vertices << " vertices " << sum.inner_triangles << " triangles, wall_s "
        << num(seconds_since(t0)) << '\n';
    return sum;
}

RenderSummary cmd_render_band(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = Clock::now();
    const AnalyticScene scene = prepare(cfg);
    const auto cams = cfg.cameras.cameras(scene.domain().center());
    const ShellTracer tracer(shell_for(cfg, scene, log));
    const Renders r = render_all_band(scene, tracer, cams, cfg);
    RenderSummary sum;
    for (std::size_t i = 0; i < r.images.size(); ++i) {
        const fs::path p = fs::path(cfg.out) / indexed("band", i);
        write_ppm(p, r.images[i], cfg.ppm_bits);
        sum.images.push_back(p);
    }
    sum.mean_samples = r.tally.mean();
    if (!cfg.reference.empty()) {
        std::vector<Image> ref;
        for (std::size_t i = 0; i < cams.size(); ++i) ref.push_back(read_ppm(fs::path(cfg.reference) / indexed("full", i)));
        sum.psnr = psnr_all(r.images, ref);
    }
    log << "render-band: images " << sum.images.size() << " mean_samples " << num(sum.mean_samples);
    if (sum.psnr) log << " psnr " << num(*sum.psnr);
    log << " wall_s " << num(seconds_since(t0)) << '\n';
    return sum;
}

CompareSummary cmd_compare(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = Clock::now();
    const AnalyticScene scene = prepare(cfg);
    const auto cams = cfg.cameras.cameras(scene.domain().center());
    const Renders full = render_all_full(scene, cams, cfg);
    Renders band;
    if (cfg.self_compare) {
        band = full;
    } else {
        const ShellTracer tracer(shell_for(cfg, scene, log));
        band = render_all_band(scene, tracer, cams, cfg);
    }

    CompareSummary sum;
    sum.psnr = psnr_all(full.images, band.images);
    sum.full_mean_samples = full.tally.mean();
    sum.band_mean_samples = band.tally.mean();
    sum.sample_ratio = sum.band_mean_samples > 0.0 ? sum.full_mean_samples / sum.band_mean_samples
                                                   : std::numeric_limits<double>::infinity();

    sum.csv = fs::path(cfg.out) / "compare.csv";
    std::string csv = "camera,x,y,full_r,full_g,full_b,band_r,band_g,band_b,full_samples,band_samples\n";
    for (std::size_t c = 0; c < cams.size(); ++c) {
        const Image& a = full.images[c];
        const Image& b = band.images[c];
        for (int y = 0; y < a.height; ++y) {
            for (int x = 0; x < a.width; ++x) {
                const std::size_t p = static_cast<std::size_t>(y) * a.width + x;
                const Vec3& ca = a.at(x, y);
                const Vec3& cb = b.at(x, y);
                csv += std::to_string(c) + ',' + std::to_string(x) + ',' + std::to_string(y) + ',' + num(ca.x) + ',' +
                       num(ca.y) + ',' + num(ca.z) + ',' + num(cb.x) + ',' + num(cb.y) + ',' + num(cb.z) + ',' +
                       std::to_string(full.outputs[c].samples_per_ray[p]) + ',' +
                       std::to_string(band.outputs[c].samples_per_ray[p]) + '\n';
            }
        }
    }
    write_text(sum.csv, csv);
    const json summary{{"psnr", num_json(sum.psnr)},
                       {"full_mean_samples", sum.full_mean_samples},
                       {"band_mean_samples", sum.band_mean_samples},
                       {"sample_ratio", num_json(sum.sample_ratio)},
                       {"cameras", cams.size()},
                       {"self_compare", cfg.self_compare}};
    write_text(fs::path(cfg.out) / "summary.json", summary.dump(2) + "\n");
    log << "compare: psnr " << num(sum.psnr) << " full_mean_samples " << num(sum.full_mean_samples)
        << " band_mean_samples " << num(sum.band_mean_samples) << " sample_ratio " << num(sum.sample_ratio)
        << " wall_s " << num(seconds_since(t0)) << '\n';
    return sum;
}

TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log) {
    const auto t0 = Clock::now();
    const AnalyticScene scene = prepare(cfg);
    const fs::path out(cfg.out);

    TrainConfig tc = cfg.train.cfg;
    tc.rng_seed = cfg.seed;
    tc.workers = cfg.workers;
    tc.background = cfg.background;
    tc.shell = cfg.shell;
    tc.sampling = cfg.sampling;
    tc.validate();

    const Aabb box = scene.domain();
    GridLayout layout;
    layout.origin = box.lo;
    layout.extent = box.size();
    layout.res = {cfg.train.grid_res, cfg.train.grid_res, cfg.train.grid_res};
    layout.validate();

    // Targets are rendered from the scene on an orbit around the domain.
    std::vector<TrainingView> views;
    const auto cams = orbit_cameras(cfg.train.views, cfg.cameras.orbit_distance, cfg.train.view_size,
                                    cfg.train.view_size, cfg.cameras.fov, box.center());
    for (const Camera& cam : cams) {
        views.push_back({cam, render_full(scene, cam, cfg.train.target_samples, cfg.background, render_options(cfg)).image});
    }

    std::string text;
    auto line = [&](const std::string& s) {
        text += s + '\n';
        log << s << '\n';
    };
    const auto on_step = [&](const TrainEvent& e) {
        if (e.iteration % cfg.train.log_every == 0) {
            line("stage " + std::to_string(e.stage) + " iter " + std::to_string(e.iteration) + " loss " +
                 num(e.total) + " color " + num(e.parts.color) + " eikonal " + num(e.parts.eikonal) + " smooth " +
                 num(e.parts.smooth) + " normal " + num(e.parts.normal));
        }
        if (cfg.train.snapshot_every > 0 && e.iteration % cfg.train.snapshot_every == 0) {
            const GridScene current(std::make_shared<const GridField>(e.state->field));
            const RenderOutput o = render_full(current, cams.front(), tc.samples_per_ray, tc.background,
                                               render_options(cfg));
            char name[64];
            std::snprintf(name, sizeof name, "snapshot_%06d.ppm", e.iteration);
            write_ppm(out / name, o.image, cfg.ppm_bits);
        }
    };

    const TrainResult res = train_two_stage(views, tc, layout, on_step);

    TrainSummary sum;
    sum.psnr_stage1 = res.psnr_stage1;
    sum.psnr_stage2 = res.psnr_stage2;
    sum.checkpoint = out / "checkpoint.grid";
    write_grid_field(sum.checkpoint, res.state.field);
    write_text(out / "checkpoint_config.json", train_config_to_string(tc));
    save_shell(out / "shell", res.shell);
    line("final psnr_stage1 " + num(sum.psnr_stage1) + " psnr_stage2 " + num(sum.psnr_stage2));
    write_text(out / "log.txt", text);
    log << "train: steps " << res.state.iteration << " wall_s " << num(seconds_since(t0)) << '\n';
    return sum;
}

}  // namespace ashell
