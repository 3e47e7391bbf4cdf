#include "ashell/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "ashell/error.hpp"
#include "ashell/parallel.hpp"

namespace ashell {

void EvolutionParams::validate() const {
    if (steps < 0) throw ConfigError("evolution steps must be >= 0");
    if (!(dt > 0.0)) throw ConfigError("evolution timestep must be > 0");
    if (!(zeta > 0.0)) throw ConfigError("falloff window zeta must be > 0");
    if (!(lambda_curv >= 0.0)) throw ConfigError("curvature weight must be >= 0");
}

namespace {

// d/dx_axis of g at (i, j, k) using the values array directly.
double axis_derivative(const GridLayout& l, const std::vector<double>& v, const int ijk[3], int axis, double h) {
    const int n = l.res[axis];
    int lo[3] = {ijk[0], ijk[1], ijk[2]};
    int hi[3] = {ijk[0], ijk[1], ijk[2]};
    double span = 2.0 * h;
    if (ijk[axis] == 0) {
        hi[axis] += 1;
        span = h;
    } else if (ijk[axis] == n - 1) {
        lo[axis] -= 1;
        span = h;
    } else {
        lo[axis] -= 1;
        hi[axis] += 1;
    }
    return (v[l.index(hi[0], hi[1], hi[2])] - v[l.index(lo[0], lo[1], lo[2])]) / span;
}

Vec3 gradient_at(const GridLayout& l, const std::vector<double>& v, const int ijk[3]) {
    const Vec3 h = l.spacing();
    return {axis_derivative(l, v, ijk, 0, h.x), axis_derivative(l, v, ijk, 1, h.y), axis_derivative(l, v, ijk, 2, h.z)};
}

bool unit_gradient_at(const GridLayout& l, const std::vector<double>& v, const int ijk[3], Vec3& out) {
    const Vec3 g = gradient_at(l, v, ijk);
    const double len = norm(g);
    if (!(len >= kGradientEpsilon)) return false;
    out = g / len;
    return true;
}

double curvature_at(const GridLayout& l, const std::vector<double>& v, const int ijk[3]) {
    Vec3 center;
    if (!unit_gradient_at(l, v, ijk, center)) return 0.0;
    const Vec3 h = l.spacing();
    double div = 0.0;
    for (int a = 0; a < 3; ++a) {
        const int n = l.res[a];
        int lo[3] = {ijk[0], ijk[1], ijk[2]};
        int hi[3] = {ijk[0], ijk[1], ijk[2]};
        double span = 2.0 * h[a];
        if (ijk[a] == 0) {
            hi[a] += 1;
            span = h[a];
        } else if (ijk[a] == n - 1) {
            lo[a] -= 1;
            span = h[a];
        } else {
            lo[a] -= 1;
            hi[a] += 1;
        }
        Vec3 nlo = center, nhi = center;
        if (ijk[a] != 0 && !unit_gradient_at(l, v, lo, nlo)) return 0.0;
        if (ijk[a] != n - 1 && !unit_gradient_at(l, v, hi, nhi)) return 0.0;
        div += (nhi[a] - nlo[a]) / span;
    }
    return div;
}

}  // namespace

Vec3 gradient(const ScalarGrid& g, int i, int j, int k) {
    const int ijk[3] = {i, j, k};
    return gradient_at(g.layout, g.values, ijk);
}

double curvature(const ScalarGrid& g, int i, int j, int k) {
    const int ijk[3] = {i, j, k};
    return curvature_at(g.layout, g.values, ijk);
}

double falloff(double f, double zeta) {
    if (!(zeta > 0.0)) throw DomainError("falloff: zeta must be > 0");
    const double x = std::clamp(f / zeta, -1.0, 1.0);
    return 0.5 * (1.0 + std::cos(std::numbers::pi * x));
}

ScalarGrid evolve(const ScalarGrid& f0, const ScalarGrid& velocity, const EvolutionParams& p, unsigned workers) {
    p.validate();
    f0.layout.validate();
    if (!(velocity.layout == f0.layout)) throw ConfigError("velocity grid is not congruent with the level set grid");

    double vmax = 0.0;
    for (double v : velocity.values) vmax = std::max(vmax, std::abs(v));
    if (p.dt * vmax >= f0.layout.min_spacing()) {
        std::ostringstream msg;
        msg << "level set CFL advisory: dt * max|v| = " << p.dt * vmax << " >= grid spacing "
            << f0.layout.min_spacing();
        warn(msg.str());
    }

    const GridLayout& l = f0.layout;
    // Curvature enters in units of inverse voxels and with the smoothing sign.
    const double curv_scale = p.lambda_curv * l.min_spacing();
    std::vector<double> cur = f0.values;
    std::vector<double> next = cur;
    std::vector<std::size_t> active;

    for (int step = 0; step < p.steps; ++step) {
        active.clear();
        for (std::size_t v = 0; v < cur.size(); ++v) {
            if (std::abs(cur[v]) < p.zeta) active.push_back(v);
        }
        parallel_for(active.size(), workers, [&](std::size_t a) {
            const std::size_t v = active[a];
            const auto ijk = l.unindex(v);
            const int idx[3] = {ijk[0], ijk[1], ijk[2]};
            const double grad_len = norm(gradient_at(l, cur, idx));
            double speed = velocity.values[v];
            if (p.lambda_curv > 0.0) speed -= curv_scale * curvature_at(l, cur, idx);
            const double rate = -grad_len * speed * falloff(cur[v], p.zeta);
            next[v] = cur[v] + p.dt * rate;
        });
        for (std::size_t v : active) {
            if (!std::isfinite(next[v])) {
                const auto ijk = l.unindex(v);
                std::ostringstream msg;
                msg << "level set evolution became non-finite at step " << step << " (vertex " << ijk[0] << ','
                    << ijk[1] << ',' << ijk[2] << ')';
                throw NumericalError(msg.str());
            }
        }
        // `next` already matches `cur` outside the active set; swap and resync.
        std::swap(cur, next);
        for (std::size_t v : active) next[v] = cur[v];
    }

    ScalarGrid out(l);
    out.values = std::move(cur);
    return out;
}

}  // namespace ashell
