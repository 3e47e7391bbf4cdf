#pragma once

#include <cmath>
#include <memory>
#include <variant>
#include <vector>

#include "ashell/grid.hpp"
#include "ashell/vec3.hpp"

namespace ashell {

/// Everything a scene field reports at one point.
struct FieldSample {
    double f = 0.0;  ///< signed distance, negative inside
    double s = 1.0;  ///< kernel size, > 0
    Vec3 c;          ///< emitted color
    Vec3 n;          ///< predicted normal
};

// ---------------------------------------------------------------------------
// SDF-to-opacity mapping

/// Φ_s(f) = 1 / (1 + exp(-f / s)). Infinite f maps to the limits 0 and 1.
/// Throws DomainError for NaN f or s <= 0.
double phi(double f, double s);

/// log Φ evaluated without underflow for large negative arguments.
inline double log_sigmoid(double u) {
    return u >= 0.0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u));
}

/// Logistic function without overflow on either tail.
inline double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

/// NeuS density along a ray, max(-Φ_s'(f) * df_dtau / Φ_s(f), 0).
double density(double f, double s, double df_dtau);

/// Opacity of the ray segment between a nearer sample (f_a, s_a) and a farther
/// sample (f_b, s_b): clamp((Φ(f_a) - Φ(f_b)) / Φ(f_a), 0, 1), each Φ using its
/// endpoint's own kernel size. Evaluated in log space so tiny kernels do not
/// underflow.
double alpha_interval(double f_a, double s_a, double f_b, double s_b);

// ---------------------------------------------------------------------------
// Scene fields

/// Evaluator x, d -> FieldSample over a declared domain box. Implementations
/// are pure and safe to call concurrently.
class SceneField {
public:
    virtual ~SceneField() = default;
    virtual FieldSample eval(const Vec3& x, const Vec3& d) const = 0;
    /// Signed distance and kernel size only; used by opacity probes.
    virtual void sdf_and_kernel(const Vec3& x, double& f, double& s) const {
        const FieldSample fs = eval(x, Vec3{0.0, 0.0, 1.0});
        f = fs.f;
        s = fs.s;
    }
    virtual Aabb domain() const = 0;
};

struct Material {
    double kernel_size = 0.01;
    Vec3 color{0.8, 0.8, 0.8};
    friend bool operator==(const Material&, const Material&) = default;
};

struct SphereShape {
    Vec3 center;
    double radius = 0.5;
    Material material;
    friend bool operator==(const SphereShape&, const SphereShape&) = default;
};

struct BoxShape {
    Vec3 center;
    Vec3 half_size{0.5, 0.5, 0.5};
    Material material;
    friend bool operator==(const BoxShape&, const BoxShape&) = default;
};

/// Torus around the y axis through `center`.
struct TorusShape {
    Vec3 center;
    double major_radius = 0.5;
    double minor_radius = 0.15;
    Material material;
    friend bool operator==(const TorusShape&, const TorusShape&) = default;
};

struct SceneNode;

/// Union takes the child with the smallest distance, intersection the largest;
/// kernel size and color come from the selected child. An empty union is
/// empty space (f = +inf).
struct CsgNode {
    enum class Op { Union, Intersection };
    Op op = Op::Union;
    std::vector<SceneNode> children;
    friend bool operator==(const CsgNode&, const CsgNode&);
};

struct SceneNode {
    std::variant<SphereShape, BoxShape, TorusShape, CsgNode> shape;
    friend bool operator==(const SceneNode&, const SceneNode&) = default;
};

/// Closed-form SDF composition. Normals are normalized central differences of f
/// with step 1e-4.
class AnalyticScene final : public SceneField {
public:
    AnalyticScene(SceneNode root, Aabb domain);

    FieldSample eval(const Vec3& x, const Vec3& d) const override;
    void sdf_and_kernel(const Vec3& x, double& f, double& s) const override;
    Aabb domain() const override { return domain_; }

    double sdf(const Vec3& x) const;
    const SceneNode& root() const { return root_; }

    static constexpr double kNormalStep = 1e-4;

private:
    SceneNode root_;
    Aabb domain_;
};

/// Trilinear lookup of every channel; s = exp(interpolated log s), color clamped
/// to [0, 1]. Positions outside the grid clamp to the boundary.
FieldSample grid_sample(const GridField& g, const Vec3& x);

/// Scene backed by a GridField.
class GridScene final : public SceneField {
public:
    explicit GridScene(std::shared_ptr<const GridField> field);

    FieldSample eval(const Vec3& x, const Vec3& d) const override;
    void sdf_and_kernel(const Vec3& x, double& f, double& s) const override;
    Aabb domain() const override { return field_->layout.bounds(); }
    const GridField& field() const { return *field_; }

private:
    std::shared_ptr<const GridField> field_;
};

/// Samples a scene at every vertex of `layout` (direction +z). Infinite distances
/// are stored as +/- the domain diagonal so the grid stays finite.
GridField bake_grid(const SceneField& scene, const GridLayout& layout, unsigned workers = 0);

}  // namespace ashell
