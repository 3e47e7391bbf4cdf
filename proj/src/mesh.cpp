#include "ashell/mesh.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "ashell/error.hpp"

namespace ashell {

Vec3 TriMesh::triangle_normal(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec3& a = vertices[tri[0]];
    return cross(vertices[tri[1]] - a, vertices[tri[2]] - a);
}

Aabb TriMesh::bounds() const {
    Aabb box{Vec3::splat(std::numeric_limits<double>::infinity()), Vec3::splat(-std::numeric_limits<double>::infinity())};
    for (const auto& v : vertices) {
        box.lo = vmin(box.lo, v);
        box.hi = vmax(box.hi, v);
    }
    return box;
}

double TriMesh::signed_volume() const {
    double vol = 0.0;
    for (const auto& tri : triangles) {
        vol += dot(vertices[tri[0]], cross(vertices[tri[1]], vertices[tri[2]]));
    }
    return vol / 6.0;
}

void TriMesh::validate() const {
    for (const auto& tri : triangles) {
        for (auto i : tri) {
            if (i >= vertices.size()) throw ConfigError("mesh triangle index out of range");
        }
    }
}

void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << std::setprecision(17);
    for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

TriMesh read_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    TriMesh mesh;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<long> idx;
            std::string tok;
            while (ls >> tok) {
                // accept "a", "a/b", "a//c", and negative (relative) indices
                const long raw = std::stol(tok.substr(0, tok.find('/')));
                idx.push_back(raw < 0 ? static_cast<long>(mesh.vertices.size()) + raw : raw - 1);
            }
            if (idx.size() < 3) throw IoError(path.string() + ":" + std::to_string(lineno) + ": face needs 3 indices");
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
                mesh.triangles.push_back({static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[k]),
                                          static_cast<std::uint32_t>(idx[k + 1])});
            }
        }
    }
    try {
        mesh.validate();
    } catch (const ConfigError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return mesh;
}

}  // namespace ashell
