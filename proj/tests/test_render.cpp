#include <cmath>
#include <numbers>

#include "doctest.h"

#include "ashell/error.hpp"
#include "ashell/render.hpp"
#include "support.hpp"

using namespace ashell;
using namespace ashell::testing;

TEST_CASE("generate_rays through pixel centers") {
    Camera cam;
    cam.position = {1.0, 2.0, 3.0};
    cam.look_at = {0.0, 0.5, -1.0};
    cam.width = 5;
    cam.height = 3;
    const auto rays = generate_rays(cam);
    REQUIRE(rays.size() == 15);
    for (const Ray& r : rays) CHECK(std::abs(norm(r.d) - 1.0) < 1e-12);
    const Vec3 axis = normalized(cam.look_at - cam.position);
    const Ray& center = rays[1 * 5 + 2];
    CHECK(norm(center.d - axis) < 1e-12);
}

TEST_CASE("2x2 rays are symmetric about the axis") {
    Camera cam;
    cam.width = cam.height = 2;
    const auto rays = generate_rays(cam);
    REQUIRE(rays.size() == 4);
    CHECK(rays[0].d.x == doctest::Approx(-rays[1].d.x));
    CHECK(rays[0].d.y == doctest::Approx(-rays[2].d.y));
    CHECK(rays[0].d.z == doctest::Approx(rays[3].d.z));
    CHECK(rays[3].d.x == doctest::Approx(-rays[0].d.x));
}

TEST_CASE("corner pixel angle at 90 degree fov") {
    Camera cam;
    cam.vertical_fov = 90.0;
    cam.width = cam.height = 100;
    const auto rays = generate_rays(cam);
    // Image plane at distance 1 spans [-1, 1]; the corner pixel center is half a pixel in.
    const double c = 1.0 - 1.0 / 100.0;
    const double expected = std::atan(std::sqrt(2.0) * c);
    const double angle = std::acos(dot(rays[0].d, Vec3{0.0, 0.0, -1.0}));
    CHECK(angle == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("camera validation") {
    Camera cam;
    cam.look_at = cam.position;
    CHECK_THROWS_AS(generate_rays(cam), ConfigError);
    cam = Camera{};
    cam.up = {0.0, 0.0, 1.0};
    CHECK_THROWS_AS(cam.validate(), ConfigError);
    cam = Camera{};
    cam.vertical_fov = 180.0;
    CHECK_THROWS_AS(cam.validate(), ConfigError);
}

TEST_CASE("composite examples") {
    const auto empty = composite({}, {});
    CHECK(empty.transmittance == 1.0);
    CHECK(empty.color == Vec3{});
    const std::vector<double> one{1.0};
    const std::vector<Vec3> c{{0.2, 0.4, 0.6}};
    const auto opaque = composite(one, c);
    CHECK(opaque.transmittance == 0.0);
    CHECK(opaque.color == c[0]);
    const std::vector<double> half{0.5, 0.5};
    const std::vector<Vec3> rb{{1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}};
    const auto two = composite(half, rb);
    CHECK(two.color.x == doctest::Approx(0.5));
    CHECK(two.color.z == doctest::Approx(0.25));
    CHECK(two.transmittance == doctest::Approx(0.25));
    const std::vector<double> bad{1.5};
    CHECK_THROWS_AS(composite(bad, c), DomainError);
}

TEST_CASE("composite ignores transparent samples and T commutes") {
    const std::vector<double> a{0.3, 0.7};
    const std::vector<double> b{0.7, 0.3};
    const std::vector<double> a0{0.3, 0.7, 0.0};
    const std::vector<Vec3> col{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
    const std::vector<Vec3> col0{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
    CHECK(composite(a0, col0).color == composite(a, col).color);
    CHECK(composite(a, col).transmittance == composite(b, col).transmittance);
    CHECK(!(composite(a, col).color == composite(b, col).color));
}

TEST_CASE("homogeneous medium transmittance") {
    for (double sigma_l : {0.5, 1.0, 5.0}) {
        const int n = 1024;
        const double delta = sigma_l / n;
        const std::vector<double> alphas(n, 1.0 - std::exp(-delta));
        const std::vector<Vec3> colors(n, Vec3{1.0, 1.0, 1.0});
        const double t = composite(alphas, colors).transmittance;
        CHECK(std::abs(t - std::exp(-sigma_l)) / std::exp(-sigma_l) < 1e-3);
    }
}

TEST_CASE("render_full on an empty scene shows the background") {
    CsgNode none;
    const AnalyticScene empty(SceneNode{none}, kUnitBox);
    Camera cam;
    cam.width = cam.height = 8;
    const Vec3 bg{0.1, 0.2, 0.3};
    const RenderOutput out = render_full(empty, cam, 16, bg, {1});
    for (std::size_t p = 0; p < out.image.pixels.size(); ++p) {
        CHECK(out.image.pixels[p] == bg);
        CHECK(out.transmittance[p] == 1.0);
    }
}

TEST_CASE("render_full through a sharp wall") {
    BoxShape wall;
    wall.half_size = {2.0, 2.0, 0.2};
    wall.material.kernel_size = 1e-4;
    wall.material.color = {0.3, 0.6, 0.9};
    const AnalyticScene scene(SceneNode{wall}, kUnitBox);
    Camera cam;
    cam.width = cam.height = 3;
    const RenderOutput out = render_full(scene, cam, 256, {}, {1});
    const std::size_t mid = 4;
    CHECK(out.transmittance[mid] < 1e-3);
    CHECK(norm(out.image.pixels[mid] - wall.material.color) < 1e-3);
    CHECK(out.samples_per_ray[mid] == 256);
    CHECK(out.mean_samples == 256.0);
}

TEST_CASE("render_full converges with more samples") {
    const AnalyticScene scene = sphere_scene(0.5, 0.05);
    Camera cam;
    cam.width = cam.height = 16;
    const Image a = render_full(scene, cam, 2048, {}, {1}).image;
    const Image b = render_full(scene, cam, 4096, {}, {1}).image;
    double worst = 0.0;
    for (std::size_t p = 0; p < a.pixels.size(); ++p)
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(a.pixels[p][c] - b.pixels[p][c]));
    CHECK(worst < 1e-3);
}

TEST_CASE("rendering does not depend on workers or batching") {
    const AnalyticScene scene = two_sphere_scene();
    Camera cam;
    cam.width = cam.height = 24;
    const RenderOutput one = render_full(scene, cam, 64, {0.1, 0.1, 0.1}, {1, false, true});
    const RenderOutput many = render_full(scene, cam, 64, {0.1, 0.1, 0.1}, {4, false, true});
    const RenderOutput seq = render_full(scene, cam, 64, {0.1, 0.1, 0.1}, {3, false, false});
    CHECK(one.image.pixels == many.image.pixels);
    CHECK(one.image.pixels == seq.image.pixels);
    CHECK(one.transmittance == many.transmittance);
}

TEST_CASE("psnr examples") {
    Image a(4, 4, {0.2, 0.2, 0.2});
    Image b(4, 4, {0.3, 0.3, 0.3});
    CHECK(is_infinite_psnr(psnr(a, a)));
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(psnr(Image(2, 2, {0, 0, 0}), Image(2, 2, {1, 1, 1})) == doctest::Approx(0.0));
    CHECK_THROWS_AS(psnr(a, Image(3, 4)), DomainError);
}

TEST_CASE("ppm round trip") {
    const auto dir = scratch_dir("ppm");
    Image img(3, 2);
    for (std::size_t p = 0; p < img.pixels.size(); ++p) img.pixels[p] = {p / 6.0, 1.0 - p / 6.0, 0.5};
    write_ppm(dir / "a.ppm", img, 16);
    const Image back = read_ppm(dir / "a.ppm");
    REQUIRE(back.width == 3);
    for (std::size_t p = 0; p < img.pixels.size(); ++p) CHECK(norm(back.pixels[p] - img.pixels[p]) < 2e-5);
    write_ppm(dir / "b.ppm", img, 8);
    const std::string bytes = read_file(dir / "b.ppm");
    CHECK(bytes.substr(0, 11) == "P6\n3 2\n255\n");
    CHECK(static_cast<unsigned char>(bytes[11]) == 0);
    CHECK(static_cast<unsigned char>(bytes[12]) == 255);
    CHECK(static_cast<unsigned char>(bytes[13]) == 128);
    CHECK_THROWS_AS(read_ppm(dir / "missing.ppm"), IoError);
}

TEST_CASE("orbit cameras look at the target") {
    const auto cams = orbit_cameras(16, 3.0, 8, 8);
    REQUIRE(cams.size() == 16);
    for (const Camera& c : cams) {
        CHECK(norm(c.position) == doctest::Approx(3.0));
        CHECK(std::abs(c.position.y) <= 2.4 + 1e-12);
    }
}
