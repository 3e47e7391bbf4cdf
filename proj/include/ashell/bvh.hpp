#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ashell/mesh.hpp"
#include "ashell/render.hpp"

namespace ashell {

enum class HitFlag : std::uint8_t { Entering, Exiting };

struct Hit {
    double t = 0.0;
    HitFlag flag = HitFlag::Entering;
    std::uint32_t triangle = 0;  ///< lowest-index triangle that produced this hit

    friend bool operator==(const Hit&, const Hit&) = default;
};

/// Ray/triangle intersection (Moller-Trumbore, double precision). Edges and
/// vertices count as inside so a ray through a shared edge hits both triangles.
/// Returns the hit when t lies in the open interval (t_min, t_max); the flag is
/// Entering when the ray travels against the geometric normal.
std::optional<Hit> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c, double t_min,
                                      double t_max);

/// Sorts raw per-triangle hits by (t, triangle) and merges hits whose t agree to
/// kHitMergeTolerance (relative): a group with more entering than exiting hits
/// becomes one Entering hit, the reverse one Exiting hit, and a balanced group
/// (a grazing pair) disappears.
std::vector<Hit> merge_hits(std::vector<Hit> raw);

inline constexpr double kHitMergeTolerance = 1e-9;

/// Bounding-volume hierarchy over a triangle mesh. Immutable after construction;
/// queries may run concurrently.
class Bvh {
public:
    static constexpr int kLeafSize = 4;

    struct Node {
        Aabb box;
        std::uint32_t first = 0;  ///< leaf: first slot in tri_order; inner: left child
        std::uint32_t right = 0;  ///< inner: right child
        std::uint32_t count = 0;  ///< triangles in a leaf, 0 for inner nodes
    };

    Bvh() = default;
    /// Median split of the centroid bounds along their longest axis.
    explicit Bvh(TriMesh mesh);

    /// Every intersection in (ray.t_near, ray.t_far), ascending, merged per merge_hits.
    std::vector<Hit> cast_all_hits(const Ray& ray) const;

    const TriMesh& mesh() const { return mesh_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<std::uint32_t>& triangle_order() const { return tri_order_; }
    bool empty() const { return nodes_.empty(); }

private:
    std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids);

    TriMesh mesh_;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> tri_order_;
};

inline Bvh build_bvh(TriMesh mesh) { return Bvh(std::move(mesh)); }
inline std::vector<Hit> cast_all_hits(const Bvh& bvh, const Ray& ray) { return bvh.cast_all_hits(ray); }

}  // namespace ashell
