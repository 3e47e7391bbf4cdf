#include "ashell/marching_cubes.hpp"

#include <unordered_map>
#include <vector>

#include "ashell/parallel.hpp"
#include "mc_tables.hpp"

namespace ashell {

namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}, {0, 1, 0}, {1, 1, 0}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

struct EdgeVertex {
    std::uint64_t key;
    Vec3 position;
};

// Triangles of one z-slab of cells, as references into its local edge list.
struct SlabOutput {
    std::vector<EdgeVertex> edges;
    std::vector<std::array<std::uint32_t, 3>> triangles;
};

}  // namespace

TriMesh marching_cubes(const ScalarGrid& g, double iso, unsigned workers) {
    const GridLayout& l = g.layout;
    l.validate();
    const int nx = l.res[0], ny = l.res[1], nz = l.res[2];
    std::vector<SlabOutput> slabs(static_cast<std::size_t>(nz - 1));

    parallel_for(slabs.size(), workers, [&](std::size_t slab) {
        const int k = static_cast<int>(slab);
        SlabOutput& out = slabs[slab];
        std::unordered_map<std::uint64_t, std::uint32_t> local;
        for (int j = 0; j < ny - 1; ++j) {
            for (int i = 0; i < nx - 1; ++i) {
                double val[8];
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    val[c] = g.at(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
                    if (val[c] < iso) cube |= 1 << c;
                }
                if (cube == 0 || cube == 255) continue;
                const signed char* row = detail::kTriTable[cube];
                for (int t = 0; row[t] != -1; t += 3) {
                    std::uint32_t ids[3];
                    for (int e = 0; e < 3; ++e) {
                        const int edge = row[t + e];
                        const int c0 = kEdge[edge][0], c1 = kEdge[edge][1];
                        int lo = c0, hi = c1;
                        int axis = 0;
                        for (int a = 0; a < 3; ++a) {
                            if (kCorner[c0][a] != kCorner[c1][a]) axis = a;
                        }
                        if (kCorner[c0][axis] > kCorner[c1][axis]) std::swap(lo, hi);
                        const int li = i + kCorner[lo][0], lj = j + kCorner[lo][1], lk = k + kCorner[lo][2];
                        const std::uint64_t key = static_cast<std::uint64_t>(l.index(li, lj, lk)) * 3u + axis;
                        auto [it, inserted] = local.try_emplace(key, static_cast<std::uint32_t>(out.edges.size()));
                        if (inserted) {
                            const double v0 = val[lo], v1 = val[hi];
                            const double s = (iso - v0) / (v1 - v0);
                            const Vec3 p0 = l.position(li, lj, lk);
                            const Vec3 p1 = l.position(i + kCorner[hi][0], j + kCorner[hi][1], k + kCorner[hi][2]);
                            out.edges.push_back({key, p0 + (p1 - p0) * s});
                        }
                        ids[e] = it->second;
                    }
                    out.triangles.push_back({ids[0], ids[1], ids[2]});
                }
            }
        }
    });

    TriMesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> global;
    for (const SlabOutput& slab : slabs) {
        std::vector<std::uint32_t> remap(slab.edges.size(), UINT32_MAX);
        for (const auto& tri : slab.triangles) {
            std::array<std::uint32_t, 3> out{};
            for (int e = 0; e < 3; ++e) {
                const std::uint32_t local_id = tri[e];
                if (remap[local_id] == UINT32_MAX) {
                    const EdgeVertex& ev = slab.edges[local_id];
                    auto [it, inserted] = global.try_emplace(ev.key, static_cast<std::uint32_t>(mesh.vertices.size()));
                    if (inserted) mesh.vertices.push_back(ev.position);
                    remap[local_id] = it->second;
                }
                out[e] = remap[local_id];
            }
            const Vec3& a = mesh.vertices[out[0]];
            if (norm(cross(mesh.vertices[out[1]] - a, mesh.vertices[out[2]] - a)) == 0.0) continue;
            mesh.triangles.push_back(out);
        }
    }

    // Drop vertices referenced only by discarded zero-area triangles.
    std::vector<std::uint32_t> used(mesh.vertices.size(), UINT32_MAX);
    std::vector<Vec3> compact;
    compact.reserve(mesh.vertices.size());
    for (auto& tri : mesh.triangles) {
        for (auto& idx : tri) {
            if (used[idx] == UINT32_MAX) {
                used[idx] = static_cast<std::uint32_t>(compact.size());
                compact.push_back(mesh.vertices[idx]);
            }
            idx = used[idx];
        }
    }
    mesh.vertices = std::move(compact);
    return mesh;
}

}  // namespace ashell
