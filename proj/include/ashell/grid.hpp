#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ashell/vec3.hpp"

namespace ashell {

/// Vertex layout of a regular grid: `res` vertices per axis spanning
/// [origin, origin + extent]. Vertex (i, j, k) is stored at i + nx * (j + ny * k).
struct GridLayout {
    Vec3 origin;
    Vec3 extent{1.0, 1.0, 1.0};
    std::array<int, 3> res{2, 2, 2};

    /// Throws ConfigError unless every extent is positive and every res >= 2.
    void validate() const;

    Vec3 spacing() const {
        return {extent.x / (res[0] - 1), extent.y / (res[1] - 1), extent.z / (res[2] - 1)};
    }
    double min_spacing() const;
    std::size_t vertex_count() const {
        return static_cast<std::size_t>(res[0]) * static_cast<std::size_t>(res[1]) *
               static_cast<std::size_t>(res[2]);
    }
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(res[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(res[1]) * static_cast<std::size_t>(k));
    }
    std::array<int, 3> unindex(std::size_t idx) const;
    Vec3 position(int i, int j, int k) const;
    Aabb bounds() const { return {origin, origin + extent}; }

    friend bool operator==(const GridLayout&, const GridLayout&) = default;
};

/// The eight corner indices and weights of a trilinear lookup. Weights sum to 1.
struct TrilinearStencil {
    std::array<std::size_t, 8> index{};
    std::array<double, 8> weight{};

    template <typename Values>
    double apply(const Values& values) const {
        double acc = 0.0;
        for (int c = 0; c < 8; ++c) acc += weight[c] * values[index[c]];
        return acc;
    }
};

/// Stencil for position x. Positions outside the grid clamp to the boundary.
TrilinearStencil trilinear_stencil(const GridLayout& layout, const Vec3& x);

/// Single-channel grid: level-set fields, opacity and velocity grids.
struct ScalarGrid {
    GridLayout layout;
    std::vector<double> values;

    ScalarGrid() = default;
    explicit ScalarGrid(const GridLayout& l, double fill = 0.0) : layout(l), values(l.vertex_count(), fill) {}

    double& at(int i, int j, int k) { return values[layout.index(i, j, k)]; }
    double at(int i, int j, int k) const { return values[layout.index(i, j, k)]; }
    double sample(const Vec3& x) const { return trilinear_stencil(layout, x).apply(values); }
};

/// Binary ScalarGrid format (little-endian):
///   char[4] "ASGR", uint32 version (1), int32 res[3], float64 origin[3],
///   float64 extent[3], then vertex_count() float32 values in storage order.
void write_scalar_grid(const std::filesystem::path& path, const ScalarGrid& grid);
ScalarGrid read_scalar_grid(const std::filesystem::path& path);

/// Channels of a GridField, in parameter-vector order.
enum class Channel : int { F = 0, LogS, ColorR, ColorG, ColorB, NormalX, NormalY, NormalZ };
inline constexpr int kChannelCount = 8;

/// Regular grid of scene-field channels. All channels live in one flat parameter
/// vector (channel-major) so a trainer can address any value by a single index.
/// The kernel size is stored as log(s).
struct GridField {
    GridLayout layout;
    std::vector<double> params;

    GridField() = default;
    explicit GridField(const GridLayout& l) : layout(l), params(l.vertex_count() * kChannelCount, 0.0) {}

    std::size_t param_index(Channel c, std::size_t vertex) const {
        return static_cast<std::size_t>(c) * layout.vertex_count() + vertex;
    }
    std::span<double> channel(Channel c) {
        return {params.data() + param_index(c, 0), layout.vertex_count()};
    }
    std::span<const double> channel(Channel c) const {
        return {params.data() + param_index(c, 0), layout.vertex_count()};
    }
    ScalarGrid channel_grid(Channel c) const;
    void set_channel(Channel c, const ScalarGrid& g);
};

/// Binary GridField format (little-endian): char[4] "AGFD", uint32 version (1),
/// int32 res[3], float64 origin[3], float64 extent[3], then all parameters as float64.
void write_grid_field(const std::filesystem::path& path, const GridField& field);
GridField read_grid_field(const std::filesystem::path& path);

}  // namespace ashell
