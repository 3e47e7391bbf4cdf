#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ashell/band.hpp"
#include "ashell/grid.hpp"
#include "ashell/render.hpp"
#include "ashell/shell.hpp"

namespace ashell {

struct TrainConfig {
    double lambda_c = 1.0;
    double lambda_e = 0.1;
    double lambda_n = 0.1;
    double lambda_s = 0.01;
    double epsilon = 0.02;           ///< std of the kernel-smoothness perturbation
    double learning_rate = 1.0;
    std::optional<double> learning_rate_band;  ///< narrow-band steps; defaults to learning_rate
    int n1 = 2000;                   ///< full-ray steps
    int n2 = 200;                    ///< narrow-band steps
    int batch_rays = 512;
    std::uint64_t rng_seed = 0;
    int samples_per_ray = 64;        ///< full-ray samples during training and evaluation
    int reg_points = 256;            ///< regularizer points drawn from the batch samples
    std::optional<double> fd_step;   ///< defaults to the grid spacing
    bool l2_color = false;           ///< per-ray L2 instead of L1 color residual
    Vec3 background;
    double init_radius = 0.5;        ///< initial SDF: sphere at the domain center
    double init_kernel_size = 0.05;
    double init_color = 0.5;
    ShellParams shell;
    SamplingParams sampling;
    unsigned workers = 0;

    void validate() const;
};

struct LossParts {
    double color = 0.0;
    double eikonal = 0.0;
    double smooth = 0.0;
    double normal = 0.0;
};

enum class TrainMode { FullRay, NarrowBand };

struct TrainState {
    GridField field;
    int iteration = 0;
    std::vector<double> loss_history;  ///< total loss per step
};

/// Deterministic generator with explicit uniform and normal draws, so results
/// do not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();                  ///< [0, 1)
    double normal();                   ///< standard normal
    std::size_t index(std::size_t n);  ///< [0, n)

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

// ---------------------------------------------------------------------------
// Losses

/// Mean over rays of the per-ray L1 (or L2) norm of the color residual.
double loss_color(std::span<const Vec3> rendered, std::span<const Vec3> target, bool l2 = false);

/// Central-difference gradient of the F channel with step `fd_step`.
Vec3 fd_gradient(const GridField& field, const Vec3& x, double fd_step);

/// Mean of (|grad f| - 1)^2.
double loss_eikonal(const GridField& field, std::span<const Vec3> points, double fd_step);

/// Mean of |log s(x) - log s(x + offset)| over explicit offsets.
double loss_kernel_smooth(const GridField& field, std::span<const Vec3> points, std::span<const Vec3> offsets);

/// Draws one isotropic Gaussian offset of std `epsilon` per point from `rng`.
double loss_kernel_smooth(const GridField& field, std::span<const Vec3> points, double epsilon, Rng& rng);

/// Mean of |n(x) - grad f / |grad f||; points with |grad f| < 1e-8 add 0.
double loss_normal(const GridField& field, std::span<const Vec3> points, double fd_step);

/// lambda_c L_c + lambda_e L_e + lambda_s L_s + lambda_n L_n.
double total_loss(const LossParts& parts, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Optimization

/// Everything one step needs, drawn up front so the objective is a pure
/// function of the parameters.
struct Batch {
    std::vector<Ray> rays;
    std::vector<RayPlan> plans;
    std::vector<Vec3> targets;
    std::vector<Vec3> points;   ///< regularizer points
    std::vector<Vec3> offsets;  ///< kernel-smoothness perturbations, one per point
};

struct Evaluation {
    LossParts parts;
    double total = 0.0;
    std::vector<Vec3> rendered;
};

/// Objective of a batch. FullRay uses all four weighted terms, NarrowBand the
/// color term alone. When `grad` is given it receives dL/dparams (resized to
/// the parameter count), accumulated per ray in ray order.
Evaluation evaluate_objective(const GridField& field, const Batch& batch, const TrainConfig& cfg, TrainMode mode,
                              std::vector<double>* grad = nullptr);

/// One plain gradient-descent step. Throws NumericalError naming the first
/// parameter with a non-finite gradient.
Evaluation gradient_step(TrainState& state, const Batch& batch, const TrainConfig& cfg, TrainMode mode);

/// Posed target image.
struct TrainingView {
    Camera camera;
    Image image;
};

/// Every pixel ray of every view with its target color.
struct RayPool {
    std::vector<Ray> rays;
    std::vector<Vec3> colors;
};

RayPool make_ray_pool(std::span<const TrainingView> views);

/// Full-ray plan over the part of the ray inside `domain`.
RayPlan full_plan(const Ray& ray, const Aabb& domain, int samples);

/// Draws batch_rays rays (with replacement) and, in FullRay mode, the
/// regularizer points and perturbations.
Batch make_batch(const RayPool& pool, const Aabb& domain, const TrainConfig& cfg, TrainMode mode, Rng& rng,
                 const std::vector<BandSamples>* band = nullptr);

/// Sphere SDF around the domain center, constant kernel size and color,
/// normals along the radial direction.
GridField initial_field(const GridLayout& layout, const TrainConfig& cfg);

/// PSNR over all pixels of all views, rendered full-ray or narrow-band.
double training_psnr(const GridField& field, std::span<const TrainingView> views, const TrainConfig& cfg,
                     const ShellTracer* tracer = nullptr);

struct TrainEvent {
    int stage = 1;
    int iteration = 0;  ///< global step count after the step
    LossParts parts;
    double total = 0.0;
    const TrainState* state = nullptr;
};

struct TrainResult {
    TrainState state;
    Shell shell;
    double psnr_stage1 = 0.0;  ///< full-ray, after stage 1
    double psnr_stage2 = 0.0;  ///< narrow-band, after stage 2
};

/// n1 full-ray steps on the full objective, shell extraction from the field,
/// then n2 narrow-band steps on the color loss.
TrainResult train_two_stage(std::span<const TrainingView> views, const TrainConfig& cfg, const GridLayout& layout,
                            const std::function<void(const TrainEvent&)>& on_step = {});

}  // namespace ashell
