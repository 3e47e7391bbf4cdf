#include "ashell/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ashell {

std::optional<Hit> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c, double t_min,
                                      double t_max) {
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 p = cross(ray.d, e2);
    const double det = dot(e1, p);
    if (det == 0.0) return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 s = ray.o - a;
    const double u = dot(s, p) * inv;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vec3 q = cross(s, e1);
    const double v = dot(ray.d, q) * inv;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double t = dot(e2, q) * inv;
    if (!(t > t_min && t < t_max)) return std::nullopt;
    Hit h;
    h.t = t;
    h.flag = dot(ray.d, cross(e1, e2)) < 0.0 ? HitFlag::Entering : HitFlag::Exiting;
    return h;
}

std::vector<Hit> merge_hits(std::vector<Hit> raw) {
    std::sort(raw.begin(), raw.end(), [](const Hit& x, const Hit& y) {
        return x.t < y.t || (x.t == y.t && x.triangle < y.triangle);
    });
    std::vector<Hit> out;
    std::size_t i = 0;
    while (i < raw.size()) {
        const double t0 = raw[i].t;
        const double tol = kHitMergeTolerance * std::max(1.0, std::abs(t0));
        std::size_t j = i;
        int net = 0;
        std::uint32_t first_tri = raw[i].triangle;
        while (j < raw.size() && raw[j].t - t0 <= tol) {
            net += raw[j].flag == HitFlag::Entering ? 1 : -1;
            first_tri = std::min(first_tri, raw[j].triangle);
            ++j;
        }
        if (net != 0) out.push_back({t0, net > 0 ? HitFlag::Entering : HitFlag::Exiting, first_tri});
        i = j;
    }
    return out;
}

namespace {

Aabb triangle_box(const TriMesh& m, std::uint32_t t) {
    const auto& tri = m.triangles[t];
    Aabb box{m.vertices[tri[0]], m.vertices[tri[0]]};
    for (int k = 1; k < 3; ++k) {
        box.lo = vmin(box.lo, m.vertices[tri[k]]);
        box.hi = vmax(box.hi, m.vertices[tri[k]]);
    }
    return box;
}

// Inflates a box so flat (zero-thickness) triangles survive the slab test.
Aabb padded(Aabb box) {
    const double scale = std::max({std::abs(box.lo.x), std::abs(box.lo.y), std::abs(box.lo.z), std::abs(box.hi.x),
                                   std::abs(box.hi.y), std::abs(box.hi.z), 1.0});
    const Vec3 pad = Vec3::splat(1e-9 * scale);
    return {box.lo - pad, box.hi + pad};
}

bool hits_box(const Ray& ray, const Vec3& inv_d, const Aabb& box, double t_min, double t_max) {
    for (int a = 0; a < 3; ++a) {
        double t0 = (box.lo[a] - ray.o[a]) * inv_d[a];
        double t1 = (box.hi[a] - ray.o[a]) * inv_d[a];
        if (std::isnan(t0) || std::isnan(t1)) {
            if (ray.o[a] < box.lo[a] || ray.o[a] > box.hi[a]) return false;
            continue;
        }
        if (t0 > t1) std::swap(t0, t1);
        t_min = std::max(t_min, t0);
        t_max = std::min(t_max, t1);
        if (t_min > t_max) return false;
    }
    return true;
}

}  // namespace

Bvh::Bvh(TriMesh mesh) : mesh_(std::move(mesh)) {
    mesh_.validate();
    const auto n = static_cast<std::uint32_t>(mesh_.triangles.size());
    if (n == 0) return;
    tri_order_.resize(n);
    std::vector<Vec3> centroids(n);
    for (std::uint32_t t = 0; t < n; ++t) {
        tri_order_[t] = t;
        const auto& tri = mesh_.triangles[t];
        centroids[t] = (mesh_.vertices[tri[0]] + mesh_.vertices[tri[1]] + mesh_.vertices[tri[2]]) / 3.0;
    }
    nodes_.reserve(2 * (n / kLeafSize + 1));
    build(0, n, centroids);
}

std::uint32_t Bvh::build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids) {
    const auto node_index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box = triangle_box(mesh_, tri_order_[begin]);
    Aabb cbox{centroids[tri_order_[begin]], centroids[tri_order_[begin]]};
    for (std::uint32_t i = begin + 1; i < end; ++i) {
        const Aabb tb = triangle_box(mesh_, tri_order_[i]);
        box.lo = vmin(box.lo, tb.lo);
        box.hi = vmax(box.hi, tb.hi);
        cbox.lo = vmin(cbox.lo, centroids[tri_order_[i]]);
        cbox.hi = vmax(cbox.hi, centroids[tri_order_[i]]);
    }
    nodes_[node_index].box = padded(box);
    if (end - begin <= static_cast<std::uint32_t>(kLeafSize)) {
        nodes_[node_index].first = begin;
        nodes_[node_index].count = end - begin;
        return node_index;
    }
    const Vec3 ext = cbox.size();
    int axis = 0;
    if (ext.y > ext[axis]) axis = 1;
    if (ext.z > ext[axis]) axis = 2;
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(tri_order_.begin() + begin, tri_order_.begin() + mid, tri_order_.begin() + end,
                     [&](std::uint32_t x, std::uint32_t y) {
                         const double cx = centroids[x][axis], cy = centroids[y][axis];
                         return cx < cy || (cx == cy && x < y);
                     });
    const std::uint32_t left = build(begin, mid, centroids);
    const std::uint32_t right = build(mid, end, centroids);
    nodes_[node_index].first = left;
    nodes_[node_index].right = right;
    nodes_[node_index].count = 0;
    return node_index;
}

std::vector<Hit> Bvh::cast_all_hits(const Ray& ray) const {
    std::vector<Hit> raw;
    if (nodes_.empty()) return raw;
    const Vec3 inv_d{1.0 / ray.d.x, 1.0 / ray.d.y, 1.0 / ray.d.z};
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (!hits_box(ray, inv_d, node.box, ray.t_near, ray.t_far)) continue;
        if (node.count == 0) {
            stack.push_back(node.right);
            stack.push_back(node.first);
            continue;
        }
        for (std::uint32_t k = node.first; k < node.first + node.count; ++k) {
            const std::uint32_t t = tri_order_[k];
            const auto& tri = mesh_.triangles[t];
            if (auto h = intersect_triangle(ray, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]],
                                            mesh_.vertices[tri[2]], ray.t_near, ray.t_far)) {
                h->triangle = t;
                raw.push_back(*h);
            }
        }
    }
    return merge_hits(std::move(raw));
}

}  // namespace ashell
