#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ashell/band.hpp"
#include "ashell/render.hpp"
#include "ashell/shell.hpp"
#include "ashell/train.hpp"

namespace ashell {

/// Cameras either listed explicitly or placed on an orbit around the domain center.
struct CameraSet {
    int orbit_count = 1;
    double orbit_distance = 3.0;
    double fov = 40.0;
    int width = 64;
    int height = 64;
    std::vector<Camera> explicit_cameras;

    std::vector<Camera> cameras(const Vec3& target) const;
};

struct TrainSettings {
    TrainConfig cfg;
    int grid_res = 32;        ///< trainable grid resolution per axis
    int views = 16;
    int view_size = 64;
    int target_samples = 64;  ///< samples per ray of self-generated targets
    int log_every = 50;
    int snapshot_every = 0;   ///< 0 disables PPM snapshots
};

/// Everything a subcommand reads. Precedence when assembling it: defaults <
/// config file < ASHELL_* environment variables < command-line flags.
struct RunConfig {
    std::string scene;
    std::string out = "out";
    std::uint64_t seed = 0;
    unsigned workers = 0;
    int grid_res = 128;  ///< shell extraction grid per axis
    int samples = 256;   ///< full-ray samples per ray
    int ppm_bits = 8;
    Vec3 background;
    CameraSet cameras;
    ShellParams shell;
    SamplingParams sampling;
    TrainSettings train;
    std::string shell_dir;  ///< render-band: existing shell bundle; empty extracts inline
    std::string reference;  ///< render-band: directory of full_NN.ppm images to score against
    bool self_compare = false;

    void validate() const;
};

/// Overlays the keys present in a JSON document onto `base`. Unknown keys are
/// rejected with ConfigError.
RunConfig parse_run_config(const std::string& json_text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
std::string run_config_to_string(const RunConfig& cfg);

/// TrainConfig as stored next to checkpoints.
std::string train_config_to_string(const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Subcommands. Each writes into cfg.out, echoes the effective configuration to
// cfg.out/effective_config.json and prints a summary on `log`.

struct RenderSummary {
    std::vector<std::filesystem::path> images;
    double mean_samples = 0.0;
    std::optional<double> psnr;
};

struct ShellSummary {
    std::filesystem::path dir;
    std::size_t outer_vertices = 0, outer_triangles = 0;
    std::size_t inner_vertices = 0, inner_triangles = 0;
};

struct CompareSummary {
    double psnr = 0.0;
    double full_mean_samples = 0.0;
    double band_mean_samples = 0.0;
    double sample_ratio = 0.0;  ///< full / band mean samples
    std::filesystem::path csv;
};

struct TrainSummary {
    double psnr_stage1 = 0.0;
    double psnr_stage2 = 0.0;
    std::filesystem::path checkpoint;
};

RenderSummary cmd_render_full(const RunConfig& cfg, std::ostream& log);
ShellSummary cmd_extract_shell(const RunConfig& cfg, std::ostream& log);
RenderSummary cmd_render_band(const RunConfig& cfg, std::ostream& log);
CompareSummary cmd_compare(const RunConfig& cfg, std::ostream& log);
TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log);

/// Shell of an analytic scene on a grid_res^3 grid over its domain.
Shell scene_shell(const SceneField& scene, int grid_res, const ShellParams& p, unsigned workers);

/// PSNR over the concatenation of several image pairs.
double psnr_all(const std::vector<Image>& a, const std::vector<Image>& b);

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitIo = 4 };

/// Command-line entry point (subcommands render-full, extract-shell,
/// render-band, compare, train). Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ashell
