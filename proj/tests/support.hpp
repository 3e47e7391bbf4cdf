#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "ashell/field.hpp"
#include "ashell/grid.hpp"
#include "ashell/mesh.hpp"

namespace ashell::testing {

inline const Aabb kUnitBox{{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}};

inline GridLayout cube_layout(int res) { return GridLayout{{-1.0, -1.0, -1.0}, {2.0, 2.0, 2.0}, {res, res, res}}; }

/// Exact signed distance to a sphere at every vertex.
inline ScalarGrid sphere_sdf(int res, double radius, const Vec3& center = {}) {
    ScalarGrid g(cube_layout(res));
    for (int k = 0; k < res; ++k)
        for (int j = 0; j < res; ++j)
            for (int i = 0; i < res; ++i) g.at(i, j, k) = norm(g.layout.position(i, j, k) - center) - radius;
    return g;
}

inline AnalyticScene sphere_scene(double radius, double kernel, Vec3 color = {0.9, 0.4, 0.2}) {
    SphereShape s;
    s.radius = radius;
    s.material.kernel_size = kernel;
    s.material.color = color;
    return AnalyticScene(SceneNode{s}, kUnitBox);
}

/// Sharp and fuzzy spheres side by side.
inline AnalyticScene two_sphere_scene() {
    SphereShape a;
    a.center = {-0.5, 0.0, 0.0};
    a.radius = 0.35;
    a.material.kernel_size = 0.005;
    a.material.color = {0.9, 0.3, 0.2};
    SphereShape b;
    b.center = {0.5, 0.0, 0.0};
    b.radius = 0.35;
    b.material.kernel_size = 0.1;
    b.material.color = {0.2, 0.5, 0.9};
    CsgNode u;
    u.children = {SceneNode{a}, SceneNode{b}};
    return AnalyticScene(SceneNode{u}, kUnitBox);
}

inline Vec3 random_direction(std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    return normalized(Vec3{nd(rng), nd(rng), nd(rng)});
}

/// First distance along c + r d where g changes sign from negative to non-negative.
inline double zero_crossing(const ScalarGrid& g, const Vec3& c, const Vec3& d, double r_max = 1.0,
                            double step = 0.0025) {
    double prev = g.sample(c);
    for (double r = step; r <= r_max; r += step) {
        const double v = g.sample(c + d * r);
        if (prev < 0.0 && v >= 0.0) return r - step * v / (v - prev);
        prev = v;
    }
    return 0.0;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("ashell_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace ashell::testing
