#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ashell/vec3.hpp"

namespace ashell {

/// Triangle mesh with outward-consistent winding: the geometric normal
/// cross(b - a, c - a) points out of the enclosed region.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;

    bool empty() const { return triangles.empty(); }
    Vec3 triangle_normal(std::size_t t) const;  ///< unnormalized, length = 2 * area
    Aabb bounds() const;
    /// Signed enclosed volume (positive for outward winding of a closed mesh).
    double signed_volume() const;
    /// Throws ConfigError when an index is out of range.
    void validate() const;
};

/// ASCII OBJ with `v x y z` and 1-based `f a b c` records. Numbers are written
/// with 17 significant digits.
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);
TriMesh read_obj(const std::filesystem::path& path);

}  // namespace ashell
