#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ashell/app.hpp"
#include "ashell/error.hpp"
#include "ashell/field.hpp"
#include "ashell/scene_io.hpp"

namespace py = pybind11;
using namespace ashell;

namespace {

py::array_t<double> image_array(const Image& img) {
    py::array_t<double> a({img.height, img.width, 3});
    auto m = a.mutable_unchecked<3>();
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Vec3& p = img.at(x, y);
            m(y, x, 0) = p.x;
            m(y, x, 1) = p.y;
            m(y, x, 2) = p.z;
        }
    }
    return a;
}

Image array_image(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw ConfigError("image must have shape (height, width, 3)");
    Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    auto r = a.unchecked<3>();
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) img.at(x, y) = {r(y, x, 0), r(y, x, 1), r(y, x, 2)};
    return img;
}

py::tuple mesh_arrays(const TriMesh& m) {
    py::array_t<double> v({static_cast<py::ssize_t>(m.vertices.size()), py::ssize_t{3}});
    py::array_t<std::uint32_t> t({static_cast<py::ssize_t>(m.triangles.size()), py::ssize_t{3}});
    auto vm = v.mutable_unchecked<2>();
    auto tm = t.mutable_unchecked<2>();
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        vm(i, 0) = m.vertices[i].x;
        vm(i, 1) = m.vertices[i].y;
        vm(i, 2) = m.vertices[i].z;
    }
    for (std::size_t i = 0; i < m.triangles.size(); ++i)
        for (int k = 0; k < 3; ++k) tm(i, k) = m.triangles[i][k];
    return py::make_tuple(v, t);
}

Vec3 vec(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

Camera make_camera(std::array<double, 3> position, std::array<double, 3> look_at, std::array<double, 3> up,
                   double fov, int width, int height) {
    Camera c;
    c.position = vec(position);
    c.look_at = vec(look_at);
    c.up = vec(up);
    c.vertical_fov = fov;
    c.width = width;
    c.height = height;
    c.validate();
    return c;
}

SamplingParams sampling(double delta_s, double w_s, int n_max, int dp_max) {
    SamplingParams p;
    p.delta_s = delta_s;
    p.w_s = w_s;
    p.n_max = n_max;
    p.dp_max = dp_max;
    p.validate();
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Adaptive-shell volumetric rendering";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("phi", &phi, py::arg("f"), py::arg("s"), "Logistic CDF of -f/s.");
    m.def("alpha_interval", &alpha_interval, py::arg("f_a"), py::arg("s_a"), py::arg("f_b"), py::arg("s_b"),
          "Opacity of the interval between two samples.");
    m.def(
        "interval_sample_count",
        [](double w, double delta_s, double w_s, int n_max) {
            return interval_sample_count(w, sampling(delta_s, w_s, n_max, 20));
        },
        py::arg("w"), py::arg("delta_s") = 0.01, py::arg("w_s") = 0.02, py::arg("n_max") = 16);

    py::class_<Camera>(m, "Camera")
        .def(py::init(&make_camera), py::arg("position") = std::array<double, 3>{0.0, 0.0, 3.0},
             py::arg("look_at") = std::array<double, 3>{0.0, 0.0, 0.0},
             py::arg("up") = std::array<double, 3>{0.0, 1.0, 0.0}, py::arg("fov") = 40.0, py::arg("width") = 64,
             py::arg("height") = 64)
        .def_readonly("width", &Camera::width)
        .def_readonly("height", &Camera::height)
        .def_readonly("fov", &Camera::vertical_fov);

    py::class_<AnalyticScene>(m, "Scene")
        .def_static("from_json", &parse_scene, py::arg("text"))
        .def_static(
            "load", [](const std::string& path) { return load_scene(path); }, py::arg("path"))
        .def("to_json", &scene_to_string)
        .def(
            "sample",
            [](const AnalyticScene& s, std::array<double, 3> x) {
                const FieldSample f = s.eval(vec(x), {0.0, 0.0, 1.0});
                return py::dict(py::arg("f") = f.f, py::arg("s") = f.s,
                                py::arg("color") = std::array<double, 3>{f.c.x, f.c.y, f.c.z});
            },
            py::arg("x"));

    py::class_<Shell>(m, "Shell")
        .def_property_readonly("outer", [](const Shell& s) { return mesh_arrays(s.outer); })
        .def_property_readonly("inner", [](const Shell& s) { return mesh_arrays(s.inner); })
        .def("save", [](const Shell& s, const std::string& dir) { save_shell(dir, s); }, py::arg("dir"))
        .def_static(
            "load", [](const std::string& dir) { return load_shell(dir); }, py::arg("dir"));

    m.def(
        "extract_shell",
        [](const AnalyticScene& scene, int grid_res, unsigned workers) {
            py::gil_scoped_release release;
            return scene_shell(scene, grid_res, ShellParams{}, workers);
        },
        py::arg("scene"), py::arg("grid_res") = 128, py::arg("workers") = 0);

    m.def(
        "render_full",
        [](const AnalyticScene& scene, const Camera& cam, int samples, std::array<double, 3> background,
           unsigned workers) {
            RenderOutput out;
            {
                py::gil_scoped_release release;
                out = render_full(scene, cam, samples, vec(background), {workers});
            }
            return py::make_tuple(image_array(out.image), out.mean_samples);
        },
        py::arg("scene"), py::arg("camera"), py::arg("samples") = 256,
        py::arg("background") = std::array<double, 3>{0.0, 0.0, 0.0}, py::arg("workers") = 0,
        "Returns (image of shape (height, width, 3), mean samples per ray).");

    m.def(
        "render_band",
        [](const AnalyticScene& scene, const Shell& shell, const Camera& cam, std::array<double, 3> background,
           double delta_s, double w_s, int n_max, int dp_max, unsigned workers) {
            const SamplingParams p = sampling(delta_s, w_s, n_max, dp_max);
            RenderOutput out;
            {
                py::gil_scoped_release release;
                const ShellTracer tracer(shell);
                out = render_band(scene, tracer, cam, p, vec(background), {workers});
            }
            return py::make_tuple(image_array(out.image), out.mean_samples);
        },
        py::arg("scene"), py::arg("shell"), py::arg("camera"),
        py::arg("background") = std::array<double, 3>{0.0, 0.0, 0.0}, py::arg("delta_s") = 0.01,
        py::arg("w_s") = 0.02, py::arg("n_max") = 16, py::arg("dp_max") = 20, py::arg("workers") = 0,
        "Returns (image of shape (height, width, 3), mean samples per ray).");

    m.def(
        "psnr",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return psnr(array_image(a), array_image(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "ashell");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
