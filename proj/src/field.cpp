#include "ashell/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ashell/error.hpp"
#include "ashell/parallel.hpp"

namespace ashell {

namespace {

void check_kernel(double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("kernel size must be finite and > 0, got " + std::to_string(s));
}

}  // namespace

double phi(double f, double s) {
    check_kernel(s);
    if (std::isnan(f)) throw DomainError("phi: signed distance is NaN");
    return sigmoid(f / s);
}

double density(double f, double s, double df_dtau) {
    const double p = phi(f, s);
    // Φ'(f) / Φ(f) = (1 - Φ(f)) / s
    return std::max(-(1.0 - p) * df_dtau / s, 0.0);
}

double alpha_interval(double f_a, double s_a, double f_b, double s_b) {
    check_kernel(s_a);
    check_kernel(s_b);
    if (std::isnan(f_a) || std::isnan(f_b)) throw DomainError("alpha_interval: signed distance is NaN");
    if (f_a == f_b && s_a == s_b) return 0.0;
    // 1 - Φ_b / Φ_a = -expm1(log Φ_b - log Φ_a)
    const double d = log_sigmoid(f_b / s_b) - log_sigmoid(f_a / s_a);
    if (std::isnan(d)) return 0.0;  // both endpoints at -inf
    return std::clamp(-std::expm1(d), 0.0, 1.0);
}

bool operator==(const CsgNode& a, const CsgNode& b) { return a.op == b.op && a.children == b.children; }

// ---------------------------------------------------------------------------

namespace {

struct NodeValue {
    double f;
    const Material* material;
};

double sphere_sdf(const SphereShape& s, const Vec3& x) { return norm(x - s.center) - s.radius; }

double box_sdf(const BoxShape& b, const Vec3& x) {
    const Vec3 p = x - b.center;
    const Vec3 q{std::abs(p.x) - b.half_size.x, std::abs(p.y) - b.half_size.y, std::abs(p.z) - b.half_size.z};
    const double outside = norm(vmax(q, Vec3{}));
    const double inside = std::min(std::max({q.x, q.y, q.z}), 0.0);
    return outside + inside;
}

double torus_sdf(const TorusShape& t, const Vec3& x) {
    const Vec3 p = x - t.center;
    const double ring = std::sqrt(p.x * p.x + p.z * p.z) - t.major_radius;
    return std::sqrt(ring * ring + p.y * p.y) - t.minor_radius;
}

const Material kEmptyMaterial{};

NodeValue eval_node(const SceneNode& node, const Vec3& x) {
    struct Visitor {
        const Vec3& x;
        NodeValue operator()(const SphereShape& s) const { return {sphere_sdf(s, x), &s.material}; }
        NodeValue operator()(const BoxShape& b) const { return {box_sdf(b, x), &b.material}; }
        NodeValue operator()(const TorusShape& t) const { return {torus_sdf(t, x), &t.material}; }
        NodeValue operator()(const CsgNode& csg) const {
            const bool is_union = csg.op == CsgNode::Op::Union;
            NodeValue best{is_union ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity(),
                           &kEmptyMaterial};
            bool first = true;
            for (const auto& child : csg.children) {
                const NodeValue v = eval_node(child, x);
                if (first || (is_union ? v.f < best.f : v.f > best.f)) best = v;
                first = false;
            }
            if (csg.children.empty()) best.f = std::numeric_limits<double>::infinity();
            return best;
        }
    };
    return std::visit(Visitor{x}, node.shape);
}

}  // namespace

AnalyticScene::AnalyticScene(SceneNode root, Aabb domain) : root_(std::move(root)), domain_(domain) {
    for (int a = 0; a < 3; ++a) {
        if (!(domain_.hi[a] > domain_.lo[a])) throw ConfigError("scene domain box must have positive size");
    }
}

double AnalyticScene::sdf(const Vec3& x) const { return eval_node(root_, x).f; }

void AnalyticScene::sdf_and_kernel(const Vec3& x, double& f, double& s) const {
    const NodeValue v = eval_node(root_, x);
    f = v.f;
    s = v.material->kernel_size;
}

FieldSample AnalyticScene::eval(const Vec3& x, const Vec3& /*d*/) const {
    const NodeValue v = eval_node(root_, x);
    FieldSample out;
    out.f = v.f;
    out.s = v.material->kernel_size;
    out.c = v.material->color;
    const double h = kNormalStep;
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
        Vec3 e;
        e[a] = h;
        g[a] = (sdf(x + e) - sdf(x - e)) / (2.0 * h);
    }
    out.n = all_finite(g) ? normalized(g) : Vec3{};
    return out;
}

// ---------------------------------------------------------------------------

FieldSample grid_sample(const GridField& g, const Vec3& x) {
    const TrilinearStencil st = trilinear_stencil(g.layout, x);
    auto ch = [&](Channel c) { return st.apply(g.channel(c)); };
    FieldSample out;
    out.f = ch(Channel::F);
    out.s = std::exp(ch(Channel::LogS));
    out.c = {std::clamp(ch(Channel::ColorR), 0.0, 1.0), std::clamp(ch(Channel::ColorG), 0.0, 1.0),
             std::clamp(ch(Channel::ColorB), 0.0, 1.0)};
    out.n = {ch(Channel::NormalX), ch(Channel::NormalY), ch(Channel::NormalZ)};
    return out;
}

GridScene::GridScene(std::shared_ptr<const GridField> field) : field_(std::move(field)) {
    if (!field_) throw ConfigError("GridScene requires a field");
    field_->layout.validate();
}

FieldSample GridScene::eval(const Vec3& x, const Vec3& /*d*/) const { return grid_sample(*field_, x); }

void GridScene::sdf_and_kernel(const Vec3& x, double& f, double& s) const {
    const TrilinearStencil st = trilinear_stencil(field_->layout, x);
    f = st.apply(field_->channel(Channel::F));
    s = std::exp(st.apply(field_->channel(Channel::LogS)));
}

GridField bake_grid(const SceneField& scene, const GridLayout& layout, unsigned workers) {
    layout.validate();
    GridField out(layout);
    const double diag = norm(scene.domain().size());
    const Vec3 dir{0.0, 0.0, 1.0};
    const std::size_t n = layout.vertex_count();
    parallel_for(n, workers, [&](std::size_t v) {
        const auto ijk = layout.unindex(v);
        const FieldSample fs = scene.eval(layout.position(ijk[0], ijk[1], ijk[2]), dir);
        double f = fs.f;
        if (std::isnan(f)) throw NumericalError("scene evaluation returned NaN during baking");
        if (std::isinf(f)) f = f > 0 ? diag : -diag;
        if (!(fs.s > 0.0)) throw DomainError("scene returned a non-positive kernel size");
        out.params[out.param_index(Channel::F, v)] = f;
        out.params[out.param_index(Channel::LogS, v)] = std::log(fs.s);
        out.params[out.param_index(Channel::ColorR, v)] = fs.c.x;
        out.params[out.param_index(Channel::ColorG, v)] = fs.c.y;
        out.params[out.param_index(Channel::ColorB, v)] = fs.c.z;
        out.params[out.param_index(Channel::NormalX, v)] = fs.n.x;
        out.params[out.param_index(Channel::NormalY, v)] = fs.n.y;
        out.params[out.param_index(Channel::NormalZ, v)] = fs.n.z;
    });
    return out;
}

}  // namespace ashell
