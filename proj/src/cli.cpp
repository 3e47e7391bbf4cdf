#include <functional>
#include <ostream>

#include <CLI11.hpp>

#include "ashell/app.hpp"
#include "ashell/error.hpp"

namespace ashell {

namespace {

// Command-line values; each applies only when given by flag or environment.
struct Overrides {
    std::string config;
    std::string scene, out, shell_dir, reference;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    int grid_res = 0, samples = 0, n_max = 0, dp_max = 0;
    double delta_s = 0.0, w_s = 0.0;
    int cameras = 0, width = 0, height = 0, ppm_bits = 0;
    int n1 = 0, n2 = 0, train_grid_res = 0, views = 0;
    bool self_compare = false;
};

struct Registered {
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> options;
    CLI::Option* config = nullptr;
};

template <typename T>
void add(CLI::App& app, Registered& reg, const std::string& flag, const std::string& env, T& store,
         const std::string& help, std::function<void(RunConfig&)> apply) {
    CLI::Option* opt = app.add_option(flag, store, help)->envname("ASHELL_" + env);
    reg.options.emplace_back(opt, std::move(apply));
}

void add_common(CLI::App& app, Overrides& o, Registered& reg) {
    reg.config = app.add_option("--config", o.config, "JSON run configuration")->envname("ASHELL_CONFIG");
    add(app, reg, "--scene", "SCENE", o.scene, "JSON scene file", [&o](RunConfig& c) { c.scene = o.scene; });
    add(app, reg, "--out", "OUT", o.out, "output directory", [&o](RunConfig& c) { c.out = o.out; });
    add(app, reg, "--seed", "SEED", o.seed, "random seed", [&o](RunConfig& c) { c.seed = o.seed; });
    add(app, reg, "--workers", "WORKERS", o.workers, "worker threads (0 = all cores)",
        [&o](RunConfig& c) { c.workers = o.workers; });
    add(app, reg, "--grid-res", "GRID_RES", o.grid_res, "shell extraction grid resolution",
        [&o](RunConfig& c) { c.grid_res = o.grid_res; });
    add(app, reg, "--samples", "SAMPLES", o.samples, "full-ray samples per ray",
        [&o](RunConfig& c) { c.samples = o.samples; });
    add(app, reg, "--delta-s", "DELTA_S", o.delta_s, "band sample spacing",
        [&o](RunConfig& c) { c.sampling.delta_s = o.delta_s; });
    add(app, reg, "--ws", "WS", o.w_s, "band width below which one sample is used",
        [&o](RunConfig& c) { c.sampling.w_s = o.w_s; });
    add(app, reg, "--nmax", "NMAX", o.n_max, "maximum samples per band interval",
        [&o](RunConfig& c) { c.sampling.n_max = o.n_max; });
    add(app, reg, "--dpmax", "DPMAX", o.dp_max, "maximum outer-shell hits per ray",
        [&o](RunConfig& c) { c.sampling.dp_max = o.dp_max; });
    add(app, reg, "--cameras", "CAMERAS", o.cameras, "number of orbit cameras",
        [&o](RunConfig& c) { c.cameras.orbit_count = o.cameras; });
    add(app, reg, "--width", "WIDTH", o.width, "image width", [&o](RunConfig& c) { c.cameras.width = o.width; });
    add(app, reg, "--height", "HEIGHT", o.height, "image height",
        [&o](RunConfig& c) { c.cameras.height = o.height; });
    add(app, reg, "--ppm-bits", "PPM_BITS", o.ppm_bits, "PPM bit depth (8 or 16)",
        [&o](RunConfig& c) { c.ppm_bits = o.ppm_bits; });
}

void add_shell_source(CLI::App& app, Overrides& o, Registered& reg) {
    add(app, reg, "--shell-dir", "SHELL_DIR", o.shell_dir, "existing shell directory (extracted inline if absent)",
        [&o](RunConfig& c) { c.shell_dir = o.shell_dir; });
}

int exit_for(const std::exception& e, std::ostream& err, int code) {
    err << "error: " << e.what() << '\n';
    return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adaptive-shell volumetric rendering"};
    app.require_subcommand(1);

    struct Sub {
        CLI::App* app;
        Overrides values;
        Registered reg;
        std::function<void(const RunConfig&)> run;
    };
    std::vector<std::unique_ptr<Sub>> subs;
    auto make = [&](const char* name, const char* help, std::function<void(const RunConfig&)> run) -> Sub& {
        auto s = std::make_unique<Sub>();
        s->app = app.add_subcommand(name, help);
        s->run = std::move(run);
        add_common(*s->app, s->values, s->reg);
        subs.push_back(std::move(s));
        return *subs.back();
    };

    make("render-full", "dense full-ray rendering of every camera", [&](const RunConfig& c) { cmd_render_full(c, out); });
    make("extract-shell", "extract the outer and inner shell meshes", [&](const RunConfig& c) { cmd_extract_shell(c, out); });
    {
        Sub& s = make("render-band", "narrow-band rendering inside the shell",
                      [&](const RunConfig& c) { cmd_render_band(c, out); });
        add_shell_source(*s.app, s.values, s.reg);
        Overrides& o = s.values;
        add(*s.app, s.reg, "--reference", "REFERENCE", o.reference, "directory of full_NN.ppm reference images",
            [&o](RunConfig& c) { c.reference = o.reference; });
    }
    {
        Sub& s = make("compare", "full-ray and narrow-band renders of the same cameras",
                      [&](const RunConfig& c) { cmd_compare(c, out); });
        add_shell_source(*s.app, s.values, s.reg);
        CLI::Option* self = s.app->add_flag("--self", s.values.self_compare, "compare the full-ray renderer with itself")
                                ->envname("ASHELL_SELF");
        s.reg.options.emplace_back(self, [&o = s.values](RunConfig& c) { c.self_compare = o.self_compare; });
    }
    {
        Sub& s = make("train", "two-stage training on targets rendered from the scene",
                      [&](const RunConfig& c) { cmd_train(c, out); });
        Overrides& o = s.values;
        add(*s.app, s.reg, "--n1", "N1", o.n1, "full-ray steps", [&o](RunConfig& c) { c.train.cfg.n1 = o.n1; });
        add(*s.app, s.reg, "--n2", "N2", o.n2, "narrow-band steps", [&o](RunConfig& c) { c.train.cfg.n2 = o.n2; });
        add(*s.app, s.reg, "--train-grid-res", "TRAIN_GRID_RES", o.train_grid_res, "trainable grid resolution",
            [&o](RunConfig& c) { c.train.grid_res = o.train_grid_res; });
        add(*s.app, s.reg, "--views", "VIEWS", o.views, "number of target views",
            [&o](RunConfig& c) { c.train.views = o.views; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    set_warning_sink([&err](const std::string& m) { err << "warning: " << m << '\n'; });
    struct SinkReset {
        ~SinkReset() { set_warning_sink({}); }
    } reset;

    try {
        for (const auto& s : subs) {
            if (!s->app->parsed()) continue;
            RunConfig cfg;
            if (*s->reg.config) cfg = load_run_config(s->values.config);
            for (const auto& [opt, apply] : s->reg.options) {
                if (*opt) apply(cfg);
            }
            s->run(cfg);
        }
    } catch (const ConfigError& e) {
        return exit_for(e, err, kExitConfig);
    } catch (const DomainError& e) {
        return exit_for(e, err, kExitConfig);
    } catch (const NumericalError& e) {
        return exit_for(e, err, kExitNumerical);
    } catch (const IoError& e) {
        return exit_for(e, err, kExitIo);
    } catch (const std::filesystem::filesystem_error& e) {
        return exit_for(e, err, kExitIo);
    }
    return kExitOk;
}

}  // namespace ashell
