#include "ashell/shell.hpp"

#include <algorithm>
#include <cmath>

#include "ashell/error.hpp"
#include "ashell/field.hpp"
#include "ashell/marching_cubes.hpp"
#include "ashell/parallel.hpp"

namespace ashell {

void ShellParams::validate() const {
    if (!(beta_d > 0.0 && sigma_min > 0.0 && beta_e > 0.0 && v_max > 0.0)) {
        throw ConfigError("shell parameters beta_d, sigma_min, beta_e and v_max must be > 0");
    }
    if (tau_d && !(*tau_d > 0.0)) throw ConfigError("shell probe width tau_d must be > 0");
    dilation.validate();
    erosion.validate();
}

ScalarGrid opacity_grid(const ScalarGrid& f, const ScalarGrid& s, double tau_d) {
    if (!(f.layout == s.layout)) throw ConfigError("opacity_grid: f and s grids are not congruent");
    if (!(tau_d > 0.0)) throw DomainError("opacity_grid: tau_d must be > 0");
    ScalarGrid out(f.layout);
    for (std::size_t v = 0; v < f.values.size(); ++v) {
        // the probe enters at f + tau_d/2 and leaves at f - tau_d/2
        out.values[v] = alpha_interval(f.values[v] + 0.5 * tau_d, s.values[v], f.values[v] - 0.5 * tau_d, s.values[v]);
    }
    return out;
}

ScalarGrid dilation_velocity(const ScalarGrid& alpha, double beta_d, double sigma_min) {
    ScalarGrid out(alpha.layout);
    for (std::size_t v = 0; v < alpha.values.size(); ++v) {
        const double a = alpha.values[v];
        out.values[v] = a > sigma_min ? beta_d * a : 0.0;
    }
    return out;
}

ScalarGrid erosion_velocity(const ScalarGrid& alpha, double beta_e, double v_max) {
    ScalarGrid out(alpha.layout);
    for (std::size_t v = 0; v < alpha.values.size(); ++v) {
        const double a = alpha.values[v];
        out.values[v] = a > 0.0 ? std::min(v_max, beta_e / a) : v_max;
    }
    return out;
}

Shell extract_shell(const ScalarGrid& f0, const ScalarGrid& s, const ShellParams& p, unsigned workers) {
    p.validate();
    if (!(f0.layout == s.layout)) throw ConfigError("extract_shell: f and s grids are not congruent");
    const double tau_d = p.tau_d.value_or(f0.layout.min_spacing());
    const ScalarGrid alpha = opacity_grid(f0, s, tau_d);

    Shell shell;
    shell.sdf_plus = evolve(f0, dilation_velocity(alpha, p.beta_d, p.sigma_min), p.dilation, workers);
    ScalarGrid inward = erosion_velocity(alpha, p.beta_e, p.v_max);
    for (double& v : inward.values) v = -v;
    shell.sdf_minus = evolve(f0, inward, p.erosion, workers);

    for (std::size_t v = 0; v < f0.values.size(); ++v) {
        shell.sdf_plus.values[v] = std::min(f0.values[v], shell.sdf_plus.values[v]);
        shell.sdf_minus.values[v] = std::max(f0.values[v], shell.sdf_minus.values[v]);
    }
    shell.outer = marching_cubes(shell.sdf_plus, 0.0, workers);
    shell.inner = marching_cubes(shell.sdf_minus, 0.0, workers);
    return shell;
}

void save_shell(const std::filesystem::path& dir, const Shell& shell) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create shell directory " + dir.string() + ": " + ec.message());
    write_obj(dir / "outer.obj", shell.outer);
    write_obj(dir / "inner.obj", shell.inner);
    write_scalar_grid(dir / "sdf_plus.grid", shell.sdf_plus);
    write_scalar_grid(dir / "sdf_minus.grid", shell.sdf_minus);
}

Shell load_shell(const std::filesystem::path& dir) {
    Shell shell;
    shell.outer = read_obj(dir / "outer.obj");
    shell.inner = read_obj(dir / "inner.obj");
    shell.sdf_plus = read_scalar_grid(dir / "sdf_plus.grid");
    shell.sdf_minus = read_scalar_grid(dir / "sdf_minus.grid");
    return shell;
}

}  // namespace ashell
