#include "ashell/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "ashell/error.hpp"
#include "ashell/parallel.hpp"

namespace ashell {

void Camera::validate() const {
    if (width <= 0 || height <= 0) throw ConfigError("camera image size must be positive");
    if (!(vertical_fov > 0.0 && vertical_fov < 180.0)) throw ConfigError("camera fov must be in (0, 180) degrees");
    const Vec3 view = look_at - position;
    if (!(norm(view) > 0.0)) throw ConfigError("camera look_at coincides with its position");
    if (!(norm(cross(normalized(view), normalized(up))) > 1e-9)) {
        throw ConfigError("camera up vector is parallel to the view direction");
    }
}

std::vector<Ray> generate_rays(const Camera& cam) {
    cam.validate();
    const Vec3 w = normalized(cam.look_at - cam.position);
    const Vec3 u = normalized(cross(w, cam.up));
    const Vec3 v = cross(u, w);
    const double tan_half = std::tan(cam.vertical_fov * std::numbers::pi / 360.0);
    const double aspect = static_cast<double>(cam.width) / cam.height;
    std::vector<Ray> rays;
    rays.reserve(static_cast<std::size_t>(cam.width) * cam.height);
    for (int py = 0; py < cam.height; ++py) {
        for (int px = 0; px < cam.width; ++px) {
            const double sx = ((px + 0.5) / cam.width * 2.0 - 1.0) * tan_half * aspect;
            const double sy = (1.0 - (py + 0.5) / cam.height * 2.0) * tan_half;
            Ray r;
            r.o = cam.position;
            r.d = normalized(w + u * sx + v * sy);
            rays.push_back(r);
        }
    }
    return rays;
}

std::vector<Camera> orbit_cameras(int count, double distance, int width, int height, double vertical_fov,
                                  const Vec3& target) {
    if (count < 1) throw ConfigError("orbit needs at least one camera");
    if (!(distance > 0.0)) throw ConfigError("orbit distance must be > 0");
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<Camera> cams;
    for (int i = 0; i < count; ++i) {
        const double y = count == 1 ? 0.0 : 0.8 - 1.6 * i / (count - 1);
        const double r = std::sqrt(1.0 - y * y);
        const double phi = golden * i;
        Camera c;
        c.position = target + Vec3{r * std::sin(phi), y, r * std::cos(phi)} * distance;
        c.look_at = target;
        c.width = width;
        c.height = height;
        c.vertical_fov = vertical_fov;
        c.validate();
        cams.push_back(c);
    }
    return cams;
}

bool clip_to_box(const Ray& ray, const Aabb& box, double& t0, double& t1) {
    t0 = ray.t_near;
    t1 = ray.t_far;
    for (int a = 0; a < 3; ++a) {
        const double inv = 1.0 / ray.d[a];
        double ta = (box.lo[a] - ray.o[a]) * inv;
        double tb = (box.hi[a] - ray.o[a]) * inv;
        if (std::isnan(ta) || std::isnan(tb)) {
            // parallel to the slab with the origin on its plane
            if (ray.o[a] < box.lo[a] || ray.o[a] > box.hi[a]) return false;
            continue;
        }
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return t0 < t1;
}

CompositeResult composite(std::span<const double> alphas, std::span<const Vec3> colors) {
    if (alphas.size() != colors.size()) throw DomainError("composite: alphas and colors differ in length");
    CompositeResult out;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const double a = alphas[i];
        if (!(a >= 0.0 && a <= 1.0)) throw DomainError("composite: alpha outside [0, 1]");
        out.color += colors[i] * (out.transmittance * a);
        out.transmittance *= 1.0 - a;
    }
    return out;
}

RayPlan dense_plan(double t0, double t1, int n) {
    RayPlan plan;
    plan.probe_t.reserve(static_cast<std::size_t>(n));
    plan.needs_color.reserve(static_cast<std::size_t>(n));
    const double step = (t1 - t0) / n;
    for (int i = 0; i < n; ++i) plan.add_probe(t0 + (i + 0.5) * step, true);
    for (std::uint32_t i = 0; i + 1 < static_cast<std::uint32_t>(n); ++i) plan.segments.push_back({i, i + 1, i, i + 1});
    return plan;
}

namespace {

struct ProbeValues {
    std::vector<double> f;
    std::vector<double> s;
    std::vector<Vec3> c;
    std::vector<std::uint8_t> done;
    int evaluated = 0;

    void reset(std::size_t n) {
        f.assign(n, 0.0);
        s.assign(n, 1.0);
        c.assign(n, Vec3{});
        done.assign(n, 0);
        evaluated = 0;
    }
};

void evaluate_probe(const SceneField& scene, const Ray& ray, const RayPlan& plan, std::uint32_t i, ProbeValues& pv) {
    if (pv.done[i]) return;
    const Vec3 x = ray.at(plan.probe_t[i]);
    if (plan.needs_color[i]) {
        const FieldSample fs = scene.eval(x, ray.d);
        pv.f[i] = fs.f;
        pv.s[i] = fs.s;
        pv.c[i] = fs.c;
    } else {
        scene.sdf_and_kernel(x, pv.f[i], pv.s[i]);
    }
    pv.done[i] = 1;
    ++pv.evaluated;
}

}  // namespace

RenderOutput render_planned(const SceneField& scene, const Camera& cam, const PlanFn& plan_for,
                            const Vec3& background, const RenderOptions& opts) {
    const std::vector<Ray> rays = generate_rays(cam);
    RenderOutput out;
    out.image = Image(cam.width, cam.height);
    out.transmittance.assign(rays.size(), 1.0);
    out.samples_per_ray.assign(rays.size(), 0);

    parallel_for(rays.size(), opts.workers, [&](std::size_t p) {
        thread_local ProbeValues pv;
        const Ray& ray = rays[p];
        const RayPlan plan = plan_for(p, ray);
        pv.reset(plan.probe_t.size());
        const bool lazy = !opts.batched || opts.early_termination;
        if (!lazy) {
            for (std::uint32_t i = 0; i < plan.probe_t.size(); ++i) evaluate_probe(scene, ray, plan, i, pv);
        }
        Vec3 color;
        double t = 1.0;
        for (const auto& seg : plan.segments) {
            if (opts.early_termination && t < kEarlyTerminationT) break;
            if (lazy) {
                evaluate_probe(scene, ray, plan, seg.a, pv);
                evaluate_probe(scene, ray, plan, seg.b, pv);
                evaluate_probe(scene, ray, plan, seg.color_a, pv);
                evaluate_probe(scene, ray, plan, seg.color_b, pv);
            }
            const double a = alpha_interval(pv.f[seg.a], pv.s[seg.a], pv.f[seg.b], pv.s[seg.b]);
            const Vec3 seg_color = (pv.c[seg.color_a] + pv.c[seg.color_b]) * 0.5;
            color += seg_color * (t * a);
            t *= 1.0 - a;
        }
        if (plan.add_background) color += background * t;
        out.image.pixels[p] = color;
        out.transmittance[p] = t;
        out.samples_per_ray[p] = pv.evaluated;
    });

    double total = 0.0;
    for (int n : out.samples_per_ray) total += n;
    out.mean_samples = rays.empty() ? 0.0 : total / static_cast<double>(rays.size());
    return out;
}

RenderOutput render_full(const SceneField& scene, const Camera& cam, int n_samples, const Vec3& background,
                         const RenderOptions& opts) {
    if (n_samples < 2) throw ConfigError("render_full needs at least 2 samples per ray");
    const Aabb box = scene.domain();
    const PlanFn plan_for = [&](std::size_t, const Ray& ray) {
        double t0 = 0.0, t1 = 0.0;
        if (!clip_to_box(ray, box, t0, t1)) return RayPlan{};
        return dense_plan(t0, t1, n_samples);
    };
    return render_planned(scene, cam, plan_for, background, opts);
}

double psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height) throw DomainError("psnr: image dimensions differ");
    if (a.pixels.empty()) throw DomainError("psnr: empty images");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const Vec3 d = a.pixels[i] - b.pixels[i];
        sum += dot(d, d);
    }
    const double mse = sum / (3.0 * static_cast<double>(a.pixels.size()));
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

void write_ppm(const std::filesystem::path& path, const Image& image, int bits) {
    if (bits != 8 && bits != 16) throw ConfigError("PPM bit depth must be 8 or 16");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    const int maxval = bits == 8 ? 255 : 65535;
    out << "P6\n" << image.width << ' ' << image.height << '\n' << maxval << '\n';
    std::vector<unsigned char> buf;
    buf.reserve(image.pixels.size() * 3 * (bits / 8));
    for (const Vec3& p : image.pixels) {
        for (int ch = 0; ch < 3; ++ch) {
            const double v = std::clamp(p[ch], 0.0, 1.0);
            const auto q = static_cast<unsigned>(std::lround(v * maxval));
            if (bits == 16) buf.push_back(static_cast<unsigned char>(q >> 8));
            buf.push_back(static_cast<unsigned char>(q & 0xff));
        }
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

int read_header_int(std::istream& in, const std::filesystem::path& path) {
    int v = 0;
    in >> std::ws;
    while (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        in >> std::ws;
    }
    if (!(in >> v)) throw IoError("malformed PPM header: " + path.string());
    return v;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P6") throw IoError("not a binary PPM: " + path.string());
    const int w = read_header_int(in, path);
    const int h = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw IoError("bad PPM header: " + path.string());
    in.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 3 * bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw IoError("truncated PPM: " + path.string());
    Image img(w, h);
    std::size_t k = 0;
    for (auto& p : img.pixels) {
        for (int ch = 0; ch < 3; ++ch) {
            unsigned q = buf[k++];
            if (bytes == 2) q = (q << 8) | buf[k++];
            p[ch] = static_cast<double>(q) / maxval;
        }
    }
    return img;
}

}  // namespace ashell
