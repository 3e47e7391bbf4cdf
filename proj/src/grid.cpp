#include "ashell/grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "ashell/error.hpp"

namespace ashell {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void GridLayout::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (res[a] < 2) throw ConfigError("grid resolution must be >= 2 along every axis");
        if (!(extent[a] > 0.0) || !std::isfinite(extent[a])) throw ConfigError("grid extent must be positive");
        if (!std::isfinite(origin[a])) throw ConfigError("grid origin must be finite");
    }
}

double GridLayout::min_spacing() const {
    const Vec3 h = spacing();
    return std::min({h.x, h.y, h.z});
}

std::array<int, 3> GridLayout::unindex(std::size_t idx) const {
    const auto nx = static_cast<std::size_t>(res[0]);
    const auto ny = static_cast<std::size_t>(res[1]);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
}

Vec3 GridLayout::position(int i, int j, int k) const {
    const Vec3 h = spacing();
    return {origin.x + i * h.x, origin.y + j * h.y, origin.z + k * h.z};
}

namespace {

// Cell index and fractional offset along one axis, clamped to the grid.
// Coordinates within a few ulps of a vertex snap onto it so vertex lookups are exact.
void locate(double x, double origin, double h, int n, int& cell, double& t) {
    double u = (x - origin) / h;
    if (!(u > 0.0)) u = 0.0;  // also maps NaN to the boundary
    const double top = static_cast<double>(n - 1);
    if (u > top) u = top;
    const double r = std::round(u);
    if (std::abs(u - r) <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, r)) u = r;
    cell = std::min(static_cast<int>(u), n - 2);
    t = u - cell;
}

}  // namespace

TrilinearStencil trilinear_stencil(const GridLayout& layout, const Vec3& x) {
    const Vec3 h = layout.spacing();
    int ci[3];
    double t[3];
    for (int a = 0; a < 3; ++a) locate(x[a], layout.origin[a], h[a], layout.res[a], ci[a], t[a]);
    TrilinearStencil s;
    for (int c = 0; c < 8; ++c) {
        const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
        s.index[c] = layout.index(ci[0] + dx, ci[1] + dy, ci[2] + dz);
        s.weight[c] = (dx ? t[0] : 1.0 - t[0]) * (dy ? t[1] : 1.0 - t[1]) * (dz ? t[2] : 1.0 - t[2]);
    }
    return s;
}

ScalarGrid GridField::channel_grid(Channel c) const {
    ScalarGrid g(layout);
    const auto src = channel(c);
    std::copy(src.begin(), src.end(), g.values.begin());
    return g;
}

void GridField::set_channel(Channel c, const ScalarGrid& g) {
    if (!(g.layout == layout)) throw ConfigError("channel grid layout does not match the field");
    auto dst = channel(c);
    std::copy(g.values.begin(), g.values.end(), dst.begin());
}

namespace {

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated grid file: " + path.string());
    return v;
}

void write_header(std::ofstream& out, const char magic[4], const GridLayout& l) {
    out.write(magic, 4);
    put<std::uint32_t>(out, 1);
    for (int a = 0; a < 3; ++a) put<std::int32_t>(out, l.res[a]);
    for (int a = 0; a < 3; ++a) put<double>(out, l.origin[a]);
    for (int a = 0; a < 3; ++a) put<double>(out, l.extent[a]);
}

GridLayout read_header(std::ifstream& in, const char magic[4], const std::filesystem::path& path) {
    char m[4];
    in.read(m, 4);
    if (!in || std::memcmp(m, magic, 4) != 0) throw IoError("not a grid file: " + path.string());
    if (get<std::uint32_t>(in, path) != 1) throw IoError("unsupported grid file version: " + path.string());
    GridLayout l;
    for (int a = 0; a < 3; ++a) l.res[a] = get<std::int32_t>(in, path);
    for (int a = 0; a < 3; ++a) l.origin[a] = get<double>(in, path);
    for (int a = 0; a < 3; ++a) l.extent[a] = get<double>(in, path);
    try {
        l.validate();
    } catch (const ConfigError& e) {
        throw IoError("corrupt grid header in " + path.string() + ": " + e.what());
    }
    return l;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return in;
}

}  // namespace

void write_scalar_grid(const std::filesystem::path& path, const ScalarGrid& grid) {
    auto out = open_out(path);
    write_header(out, "ASGR", grid.layout);
    std::vector<float> buf(grid.values.begin(), grid.values.end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("write failed: " + path.string());
}

ScalarGrid read_scalar_grid(const std::filesystem::path& path) {
    auto in = open_in(path);
    ScalarGrid g(read_header(in, "ASGR", path));
    std::vector<float> buf(g.values.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw IoError("truncated grid file: " + path.string());
    std::copy(buf.begin(), buf.end(), g.values.begin());
    return g;
}

void write_grid_field(const std::filesystem::path& path, const GridField& field) {
    auto out = open_out(path);
    write_header(out, "AGFD", field.layout);
    out.write(reinterpret_cast<const char*>(field.params.data()),
              static_cast<std::streamsize>(field.params.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path.string());
}

GridField read_grid_field(const std::filesystem::path& path) {
    auto in = open_in(path);
    GridField f(read_header(in, "AGFD", path));
    in.read(reinterpret_cast<char*>(f.params.data()), static_cast<std::streamsize>(f.params.size() * sizeof(double)));
    if (!in) throw IoError("truncated grid file: " + path.string());
    return f;
}

}  // namespace ashell
