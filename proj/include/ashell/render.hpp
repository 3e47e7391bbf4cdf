#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ashell/field.hpp"
#include "ashell/vec3.hpp"

namespace ashell {

struct Camera {
    Vec3 position{0.0, 0.0, 3.0};
    Vec3 look_at;
    Vec3 up{0.0, 1.0, 0.0};
    double vertical_fov = 40.0;  ///< degrees
    int width = 64;
    int height = 64;

    /// Throws ConfigError for a degenerate basis, fov outside (0, 180) or empty image.
    void validate() const;
};

/// `count` cameras on a golden-angle spiral around `target` at `distance`,
/// with heights between -0.8 and 0.8 of the distance so no view looks straight
/// along the up axis.
std::vector<Camera> orbit_cameras(int count, double distance, int width, int height, double vertical_fov = 40.0,
                                  const Vec3& target = {});

struct Ray {
    Vec3 o;
    Vec3 d;  ///< unit length
    double t_near = 0.0;
    double t_far = 1e30;

    Vec3 at(double t) const { return o + d * t; }
};

/// One ray per pixel through the pixel center, row-major with row 0 at the top.
std::vector<Ray> generate_rays(const Camera& cam);

/// Clips [t_near, t_far] to a box; false when the ray misses it.
bool clip_to_box(const Ray& ray, const Aabb& box, double& t0, double& t1);

struct Image {
    int width = 0;
    int height = 0;
    std::vector<Vec3> pixels;

    Image() = default;
    Image(int w, int h, Vec3 fill = {}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
    Vec3& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Vec3& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

struct RenderOutput {
    Image image;
    std::vector<double> transmittance;
    std::vector<int> samples_per_ray;
    double mean_samples = 0.0;
};

struct CompositeResult {
    Vec3 color;
    double transmittance = 1.0;
};

/// Front-to-back alpha compositing: T_i = prod_{j<i} (1 - a_j), c = sum T_i a_i c_i.
/// Throws DomainError for alpha outside [0, 1] or mismatched lengths.
CompositeResult composite(std::span<const double> alphas, std::span<const Vec3> colors);

// ---------------------------------------------------------------------------
// Ray plans

/// How a ray is discretized: probe positions along it, and the opacity segments
/// built from them. A segment's opacity is alpha_interval over its two probes;
/// its color is the mean of the colors at `color_a` and `color_b`. Probes that
/// no segment uses for color only need f and s.
struct RayPlan {
    struct Segment {
        std::uint32_t a = 0;
        std::uint32_t b = 0;
        std::uint32_t color_a = 0;
        std::uint32_t color_b = 0;
    };
    std::vector<double> probe_t;
    std::vector<std::uint8_t> needs_color;
    std::vector<Segment> segments;
    bool add_background = true;

    std::uint32_t add_probe(double t, bool color) {
        probe_t.push_back(t);
        needs_color.push_back(color ? 1 : 0);
        return static_cast<std::uint32_t>(probe_t.size() - 1);
    }
};

/// n equidistant samples at the midpoints of a uniform partition of [t0, t1];
/// segments join consecutive samples and take the mean of their colors.
RayPlan dense_plan(double t0, double t1, int n);

struct RenderOptions {
    unsigned workers = 0;  ///< 0 = hardware parallelism
    /// Stop a ray once T < 1e-4 (only dense rendering uses this).
    bool early_termination = false;
    /// Evaluate every probe of a ray first, then composite. The sequential path
    /// must produce identical bytes.
    bool batched = true;
};

inline constexpr double kEarlyTerminationT = 1e-4;

using PlanFn = std::function<RayPlan(std::size_t pixel, const Ray& ray)>;

/// Renders every camera ray with the plan produced by `plan_for`.
RenderOutput render_planned(const SceneField& scene, const Camera& cam, const PlanFn& plan_for,
                            const Vec3& background, const RenderOptions& opts = {});

/// Dense full-ray volume rendering over the part of each ray inside the scene
/// domain. Rays missing the domain see the background with zero samples.
RenderOutput render_full(const SceneField& scene, const Camera& cam, int n_samples, const Vec3& background,
                         const RenderOptions& opts = {});

/// PSNR in dB with peak 1; identical images give +infinity.
double psnr(const Image& a, const Image& b);

inline bool is_infinite_psnr(double v) { return v == std::numeric_limits<double>::infinity(); }

/// Binary PPM (P6). 8-bit stores round(clamp(v, 0, 1) * 255); 16-bit stores
/// round(clamp(v, 0, 1) * 65535) big-endian. Values are linear, no sRGB curve.
void write_ppm(const std::filesystem::path& path, const Image& image, int bits = 8);
Image read_ppm(const std::filesystem::path& path);

}  // namespace ashell
