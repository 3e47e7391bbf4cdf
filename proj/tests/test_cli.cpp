#include <cstdlib>
#include <sstream>

#include "doctest.h"

#include "ashell/app.hpp"
#include "ashell/error.hpp"
#include "ashell/scene_io.hpp"
#include "support.hpp"

using namespace ashell;
using namespace ashell::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ashell");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path write_scene(const fs::path& dir, const AnalyticScene& scene, const char* name = "scene.json") {
    save_scene(dir / name, scene);
    return dir / name;
}

}  // namespace

TEST_CASE("render-full writes one image per camera") {
    const auto dir = scratch_dir("cli_full");
    const auto scene = write_scene(dir, sphere_scene(0.5, 0.01));
    const Run r = cli({"render-full", "--scene", scene.string(), "--out", (dir / "a").string(), "--samples", "24",
                       "--width", "16", "--height", "12", "--workers", "1"});
    CHECK(r.code == kExitOk);
    CHECK(fs::exists(dir / "a" / "full_00.ppm"));
    CHECK(fs::exists(dir / "a" / "effective_config.json"));
    CHECK(r.out.find("mean_samples 24 ") != std::string::npos);
    const Image img = read_ppm(dir / "a" / "full_00.ppm");
    CHECK(img.width == 16);
    CHECK(img.height == 12);
}

TEST_CASE("missing scene file exits with a configuration error") {
    const Run r = cli({"render-full", "--scene", "/no/such/scene.json", "--out", "/tmp/ashell_unused"});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("/no/such/scene.json") != std::string::npos);
}

TEST_CASE("bad flags and config keys exit with code 2") {
    CHECK(cli({"render-full", "--nope"}).code == kExitConfig);
    CHECK(cli({}).code == kExitConfig);
    const auto dir = scratch_dir("cli_badcfg");
    const auto scene = write_scene(dir, sphere_scene(0.5, 0.01));
    std::ofstream(dir / "cfg.json") << R"({"samples": 8, "sampling": {"delta": 1}})";
    const Run r = cli({"render-full", "--scene", scene.string(), "--config", (dir / "cfg.json").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("sampling.delta") != std::string::npos);
    CHECK(cli({"render-full", "--scene", scene.string(), "--samples", "1"}).code == kExitConfig);
}

TEST_CASE("unreadable shell directory is an I/O error") {
    const auto dir = scratch_dir("cli_io");
    const auto scene = write_scene(dir, sphere_scene(0.5, 0.01));
    const Run r = cli({"render-band", "--scene", scene.string(), "--out", (dir / "o").string(), "--shell-dir",
                       (dir / "missing").string()});
    CHECK(r.code == kExitIo);
}

TEST_CASE("configuration precedence is file, then environment, then flags") {
    const auto dir = scratch_dir("cli_prec");
    const auto scene = write_scene(dir, sphere_scene(0.5, 0.01));
    std::ofstream(dir / "cfg.json") << R"({"samples": 8, "grid_res": 20, "cameras": {"width": 4, "height": 4}})";
    ::setenv("ASHELL_SAMPLES", "12", 1);
    ::setenv("ASHELL_GRID_RES", "30", 1);
    const Run r = cli({"render-full", "--scene", scene.string(), "--config", (dir / "cfg.json").string(), "--out",
                       (dir / "o").string(), "--grid-res", "40"});
    ::unsetenv("ASHELL_SAMPLES");
    ::unsetenv("ASHELL_GRID_RES");
    REQUIRE(r.code == kExitOk);
    const RunConfig eff = load_run_config(dir / "o" / "effective_config.json");
    CHECK(eff.samples == 12);
    CHECK(eff.grid_res == 40);
    CHECK(eff.cameras.width == 4);
}

TEST_CASE("effective configuration round trips") {
    RunConfig c;
    c.scene = "s.json";
    c.samples = 77;
    c.shell.tau_d = 0.03;
    c.train.cfg.learning_rate_band = 2.5;
    Camera cam;
    cam.position = {1.0, 2.0, 3.0};
    c.cameras.explicit_cameras.push_back(cam);
    const RunConfig back = parse_run_config(run_config_to_string(c));
    CHECK(run_config_to_string(back) == run_config_to_string(c));
    CHECK(back.shell.tau_d == 0.03);
    CHECK(back.cameras.explicit_cameras.at(0).position == cam.position);
}

TEST_CASE("extract-shell writes meshes and grids") {
    const auto dir = scratch_dir("cli_shell");
    const auto scene = write_scene(dir, sphere_scene(0.5, 0.01));
    const Run r = cli({"extract-shell", "--scene", scene.string(), "--out", (dir / "o").string(), "--grid-res", "32"});
    REQUIRE(r.code == kExitOk);
    for (const char* f : {"outer.obj", "inner.obj", "sdf_plus.grid", "sdf_minus.grid"})
        CHECK(fs::exists(dir / "o" / "shell" / f));
    const Shell s = load_shell(dir / "o" / "shell");
    CHECK(!s.outer.empty());
    CHECK(!s.inner.empty());
}

TEST_CASE("extract-shell on an empty scene warns") {
    const auto dir = scratch_dir("cli_empty");
    CsgNode none;
    const auto scene = write_scene(dir, AnalyticScene(SceneNode{none}, kUnitBox));
    const Run r = cli({"extract-shell", "--scene", scene.string(), "--out", (dir / "o").string(), "--grid-res", "16"});
    CHECK(r.code == kExitOk);
    CHECK(r.err.find("warning") != std::string::npos);
    const Shell s = load_shell(dir / "o" / "shell");
    CHECK(s.outer.empty());
    CHECK(s.inner.empty());
}

TEST_CASE("render-band scores against a reference") {
    const auto dir = scratch_dir("cli_band");
    const auto scene = write_scene(dir, sphere_scene(0.5, 0.001));
    const std::vector<std::string> common{"--scene", scene.string(), "--width", "32", "--height", "32"};
    auto with = [&](std::vector<std::string> a) {
        a.insert(a.end(), common.begin(), common.end());
        return a;
    };
    REQUIRE(cli(with({"render-full", "--out", (dir / "full").string(), "--samples", "512"})).code == 0);
    REQUIRE(cli(with({"extract-shell", "--out", (dir / "sh").string(), "--grid-res", "64"})).code == 0);
    const Run r = cli(with({"render-band", "--out", (dir / "band").string(), "--shell-dir",
                            (dir / "sh" / "shell").string(), "--reference", (dir / "full").string()}));
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "band" / "band_00.ppm"));
    const auto pos = r.out.find("psnr ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(r.out.substr(pos + 5)) > 30.0);
}

TEST_CASE("compare summaries") {
    const auto dir = scratch_dir("cli_compare");
    const auto scene = write_scene(dir, sphere_scene(0.5, 0.001));
    const std::vector<std::string> common{"--scene", scene.string(), "--width", "24", "--height", "24",
                                          "--samples", "128", "--grid-res", "48"};
    auto with = [&](std::vector<std::string> a) {
        a.insert(a.end(), common.begin(), common.end());
        return a;
    };
    REQUIRE(cli(with({"compare", "--out", (dir / "self").string(), "--self"})).code == 0);
    const std::string self = read_file(dir / "self" / "summary.json");
    CHECK(self.find("\"psnr\": \"inf\"") != std::string::npos);
    CHECK(self.find("\"sample_ratio\": 1.0") != std::string::npos);

    REQUIRE(cli(with({"compare", "--out", (dir / "band").string()})).code == 0);
    const std::string csv = read_file(dir / "band" / "compare.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 24 * 24);
    CHECK(csv.rfind("camera,x,y,", 0) == 0);
}

TEST_CASE("train with no steps checkpoints the initialization") {
    const auto dir = scratch_dir("cli_train");
    const auto scene = write_scene(dir, sphere_scene(0.4, 0.02));
    const Run r = cli({"train", "--scene", scene.string(), "--out", (dir / "o").string(), "--n1", "0", "--n2", "0",
                       "--views", "2", "--train-grid-res", "10", "--grid-res", "10"});
    REQUIRE(r.code == kExitOk);
    const GridField ck = read_grid_field(dir / "o" / "checkpoint.grid");
    TrainConfig cfg;
    CHECK(ck.params == initial_field(ck.layout, cfg).params);
    CHECK(fs::exists(dir / "o" / "checkpoint_config.json"));
    CHECK(fs::exists(dir / "o" / "shell" / "outer.obj"));
    const std::string log = read_file(dir / "o" / "log.txt");
    CHECK(log.find("final psnr_stage1") != std::string::npos);
}
