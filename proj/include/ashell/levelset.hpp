#pragma once

#include "ashell/grid.hpp"
#include "ashell/vec3.hpp"

namespace ashell {

struct EvolutionParams {
    int steps = 50;
    double dt = 0.1;
    double zeta = 0.1;         ///< half-width of the soft falloff window
    double lambda_curv = 0.0;  ///< curvature regularization weight

    void validate() const;
};

/// Below this gradient magnitude the curvature term is taken as zero.
inline constexpr double kGradientEpsilon = 1e-8;

/// Finite-difference gradient at a vertex: central differences in the interior,
/// first-order one-sided at boundary faces. Units: field units per scene unit.
Vec3 gradient(const ScalarGrid& g, int i, int j, int k);

/// Divergence of the normalized gradient (mean curvature, positive on convex
/// shapes whose distance grows outward), by central differences of normalized
/// gradients at the neighboring vertices. Returns 0 when any stencil gradient is
/// shorter than kGradientEpsilon.
double curvature(const ScalarGrid& g, int i, int j, int k);

/// Soft falloff window 0.5 * (1 + cos(pi * clamp(f / zeta, -1, 1))).
double falloff(double f, double zeta);

/// Forward-Euler integration of
///   df/dt = -|grad f| (v - lambda_curv * h * curvature(f)) * falloff(f)
/// for p.steps steps, h being the smallest grid spacing. The curvature term
/// smooths (it shrinks convex bumps). `velocity` is fixed for the whole run; the gradient,
/// curvature and falloff use the current iterate. Vertices outside the falloff
/// window are copied unchanged. Throws NumericalError naming the step when a
/// non-finite value appears.
ScalarGrid evolve(const ScalarGrid& f0, const ScalarGrid& velocity, const EvolutionParams& p, unsigned workers = 0);

}  // namespace ashell
