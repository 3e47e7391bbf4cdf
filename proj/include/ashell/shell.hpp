#pragma once

#include <filesystem>
#include <optional>

#include "ashell/grid.hpp"
#include "ashell/levelset.hpp"
#include "ashell/mesh.hpp"

namespace ashell {

struct ShellParams {
    double beta_d = 1.0;       ///< dilation velocity scale
    double sigma_min = 0.01;   ///< opacity threshold below which nothing dilates
    double beta_e = 0.001;     ///< erosion velocity scale
    double v_max = 100.0;      ///< erosion velocity cap
    /// Probe width of the per-vertex opacity; defaults to the grid spacing.
    std::optional<double> tau_d;
    EvolutionParams dilation{50, 0.1, 0.1, 0.01};
    EvolutionParams erosion{50, 0.1, 0.05, 0.0};

    void validate() const;
};

/// The band between the dilated outer boundary and the eroded inner boundary.
struct Shell {
    TriMesh outer;  ///< zero level set of sdf_plus
    TriMesh inner;  ///< zero level set of sdf_minus, possibly empty
    ScalarGrid sdf_plus;
    ScalarGrid sdf_minus;
};

/// Per-vertex opacity of a step of width tau_d centered on the vertex:
/// clamp((Φ_s(f + tau_d/2) - Φ_s(f - tau_d/2)) / Φ_s(f + tau_d/2), 0, 1).
ScalarGrid opacity_grid(const ScalarGrid& f, const ScalarGrid& s, double tau_d);

/// beta_d * alpha where alpha > sigma_min, else 0.
ScalarGrid dilation_velocity(const ScalarGrid& alpha, double beta_d, double sigma_min);

/// min(v_max, beta_e / alpha); alpha = 0 maps to v_max. This is a speed: the
/// erosion evolution moves the level set inward at this rate.
ScalarGrid erosion_velocity(const ScalarGrid& alpha, double beta_e, double v_max);

/// Dilates and erodes the zero level set of f0 (kernel sizes `s`, not log s),
/// clamps the results against f0 and extracts both boundaries.
Shell extract_shell(const ScalarGrid& f0, const ScalarGrid& s, const ShellParams& p, unsigned workers = 0);

/// Shell bundle directory: outer.obj, inner.obj, sdf_plus.grid, sdf_minus.grid.
void save_shell(const std::filesystem::path& dir, const Shell& shell);
Shell load_shell(const std::filesystem::path& dir);

}  // namespace ashell
