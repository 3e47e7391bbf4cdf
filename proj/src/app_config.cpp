#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ashell/app.hpp"
#include "ashell/error.hpp"

namespace ashell {

using nlohmann::json;

namespace {

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Fields {
public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
    }

    ~Fields() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError("unknown configuration key '" + where_ + "." + key + "'");
        }
    }

    const json* find(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const char* key, double& v) {
        if (const json* x = find(key)) {
            if (!x->is_number()) fail(key, "a number");
            v = x->get<double>();
        }
    }
    void optional_number(const char* key, std::optional<double>& v) {
        if (const json* x = find(key)) {
            if (x->is_null()) {
                v.reset();
                return;
            }
            if (!x->is_number()) fail(key, "a number or null");
            v = x->get<double>();
        }
    }
    template <typename Int>
    void integer(const char* key, Int& v) {
        if (const json* x = find(key)) {
            if (!x->is_number_integer()) fail(key, "an integer");
            if constexpr (std::is_unsigned_v<Int>) {
                if (x->get<long long>() < 0) fail(key, "a non-negative integer");
            }
            v = x->get<Int>();
        }
    }
    void boolean(const char* key, bool& v) {
        if (const json* x = find(key)) {
            if (!x->is_boolean()) fail(key, "true or false");
            v = x->get<bool>();
        }
    }
    void string(const char* key, std::string& v) {
        if (const json* x = find(key)) {
            if (!x->is_string()) fail(key, "a string");
            v = x->get<std::string>();
        }
    }
    void vec3(const char* key, Vec3& v) {
        if (const json* x = find(key)) {
            if (!x->is_array() || x->size() != 3) fail(key, "an array of 3 numbers");
            for (int a = 0; a < 3; ++a) {
                if (!(*x)[a].is_number()) fail(key, "an array of 3 numbers");
                v[a] = (*x)[a].get<double>();
            }
        }
    }
    std::string path(const char* key) const { return where_ + "." + key; }

private:
    [[noreturn]] void fail(const char* key, const char* what) const {
        throw ConfigError("configuration key '" + where_ + "." + key + "' must be " + what);
    }

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

json vec(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

void read_evolution(const json& j, const std::string& where, EvolutionParams& p) {
    Fields f(j, where);
    f.integer("steps", p.steps);
    f.number("dt", p.dt);
    f.number("zeta", p.zeta);
    f.number("lambda_curv", p.lambda_curv);
}

json write_evolution(const EvolutionParams& p) {
    return {{"steps", p.steps}, {"dt", p.dt}, {"zeta", p.zeta}, {"lambda_curv", p.lambda_curv}};
}

void read_shell(const json& j, ShellParams& p) {
    Fields f(j, "shell");
    f.number("beta_d", p.beta_d);
    f.number("sigma_min", p.sigma_min);
    f.number("beta_e", p.beta_e);
    f.number("v_max", p.v_max);
    f.optional_number("tau_d", p.tau_d);
    if (const json* x = f.find("dilation")) read_evolution(*x, "shell.dilation", p.dilation);
    if (const json* x = f.find("erosion")) read_evolution(*x, "shell.erosion", p.erosion);
}

json write_shell(const ShellParams& p) {
    json j{{"beta_d", p.beta_d},
           {"sigma_min", p.sigma_min},
           {"beta_e", p.beta_e},
           {"v_max", p.v_max},
           {"dilation", write_evolution(p.dilation)},
           {"erosion", write_evolution(p.erosion)}};
    j["tau_d"] = p.tau_d ? json(*p.tau_d) : json(nullptr);
    return j;
}

void read_sampling(const json& j, SamplingParams& p) {
    Fields f(j, "sampling");
    f.number("delta_s", p.delta_s);
    f.number("w_s", p.w_s);
    f.integer("n_max", p.n_max);
    f.integer("dp_max", p.dp_max);
}

json write_sampling(const SamplingParams& p) {
    return {{"delta_s", p.delta_s}, {"w_s", p.w_s}, {"n_max", p.n_max}, {"dp_max", p.dp_max}};
}

void read_train_fields(Fields& f, TrainConfig& c) {
    f.number("lambda_c", c.lambda_c);
    f.number("lambda_e", c.lambda_e);
    f.number("lambda_n", c.lambda_n);
    f.number("lambda_s", c.lambda_s);
    f.number("epsilon", c.epsilon);
    f.number("learning_rate", c.learning_rate);
    f.optional_number("learning_rate_band", c.learning_rate_band);
    f.integer("n1", c.n1);
    f.integer("n2", c.n2);
    f.integer("batch_rays", c.batch_rays);
    f.integer("samples_per_ray", c.samples_per_ray);
    f.integer("reg_points", c.reg_points);
    f.optional_number("fd_step", c.fd_step);
    f.boolean("l2_color", c.l2_color);
    f.number("init_radius", c.init_radius);
    f.number("init_kernel_size", c.init_kernel_size);
    f.number("init_color", c.init_color);
}

json write_train_fields(const TrainConfig& c) {
    json j{{"lambda_c", c.lambda_c},
           {"lambda_e", c.lambda_e},
           {"lambda_n", c.lambda_n},
           {"lambda_s", c.lambda_s},
           {"epsilon", c.epsilon},
           {"learning_rate", c.learning_rate},
           {"n1", c.n1},
           {"n2", c.n2},
           {"batch_rays", c.batch_rays},
           {"samples_per_ray", c.samples_per_ray},
           {"reg_points", c.reg_points},
           {"l2_color", c.l2_color},
           {"init_radius", c.init_radius},
           {"init_kernel_size", c.init_kernel_size},
           {"init_color", c.init_color}};
    j["learning_rate_band"] = c.learning_rate_band ? json(*c.learning_rate_band) : json(nullptr);
    j["fd_step"] = c.fd_step ? json(*c.fd_step) : json(nullptr);
    return j;
}

Camera read_camera(const json& j, const std::string& where) {
    Camera c;
    Fields f(j, where);
    f.vec3("position", c.position);
    f.vec3("look_at", c.look_at);
    f.vec3("up", c.up);
    f.number("fov", c.vertical_fov);
    f.integer("width", c.width);
    f.integer("height", c.height);
    return c;
}

json write_camera(const Camera& c) {
    return {{"position", vec(c.position)}, {"look_at", vec(c.look_at)}, {"up", vec(c.up)},
            {"fov", c.vertical_fov},       {"width", c.width},          {"height", c.height}};
}

}  // namespace

std::vector<Camera> CameraSet::cameras(const Vec3& target) const {
    if (!explicit_cameras.empty()) {
        for (const Camera& c : explicit_cameras) c.validate();
        return explicit_cameras;
    }
    return orbit_cameras(orbit_count, orbit_distance, width, height, fov, target);
}

void RunConfig::validate() const {
    if (grid_res < 2) throw ConfigError("grid_res must be >= 2");
    if (samples < 2) throw ConfigError("samples must be >= 2");
    if (ppm_bits != 8 && ppm_bits != 16) throw ConfigError("ppm_bits must be 8 or 16");
    if (out.empty()) throw ConfigError("output directory must not be empty");
    if (cameras.explicit_cameras.empty()) {
        if (cameras.orbit_count < 1) throw ConfigError("cameras.orbit_count must be >= 1");
        if (!(cameras.orbit_distance > 0.0)) throw ConfigError("cameras.orbit_distance must be > 0");
        if (cameras.width < 1 || cameras.height < 1) throw ConfigError("camera image size must be positive");
    }
    shell.validate();
    sampling.validate();
    train.cfg.validate();
    if (train.grid_res < 2) throw ConfigError("train.grid_res must be >= 2");
    if (train.views < 1 || train.view_size < 1) throw ConfigError("train.views and train.view_size must be >= 1");
    if (train.target_samples < 2) throw ConfigError("train.target_samples must be >= 2");
    if (train.log_every < 1 || train.snapshot_every < 0) throw ConfigError("train.log_every must be >= 1");
}

RunConfig parse_run_config(const std::string& json_text, RunConfig base) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    RunConfig& c = base;
    Fields f(j, "config");
    f.string("scene", c.scene);
    f.string("out", c.out);
    f.integer("seed", c.seed);
    f.integer("workers", c.workers);
    f.integer("grid_res", c.grid_res);
    f.integer("samples", c.samples);
    f.integer("ppm_bits", c.ppm_bits);
    f.vec3("background", c.background);
    f.string("shell_dir", c.shell_dir);
    f.string("reference", c.reference);
    f.boolean("self_compare", c.self_compare);
    if (const json* x = f.find("cameras")) {
        Fields cf(*x, "cameras");
        cf.integer("orbit_count", c.cameras.orbit_count);
        cf.number("orbit_distance", c.cameras.orbit_distance);
        cf.number("fov", c.cameras.fov);
        cf.integer("width", c.cameras.width);
        cf.integer("height", c.cameras.height);
        if (const json* list = cf.find("list")) {
            if (!list->is_array()) throw ConfigError("cameras.list must be an array");
            c.cameras.explicit_cameras.clear();
            for (std::size_t i = 0; i < list->size(); ++i) {
                c.cameras.explicit_cameras.push_back(read_camera((*list)[i], "cameras.list[" + std::to_string(i) + "]"));
            }
        }
    }
    if (const json* x = f.find("shell")) read_shell(*x, c.shell);
    if (const json* x = f.find("sampling")) read_sampling(*x, c.sampling);
    if (const json* x = f.find("train")) {
        Fields tf(*x, "train");
        read_train_fields(tf, c.train.cfg);
        tf.integer("grid_res", c.train.grid_res);
        tf.integer("views", c.train.views);
        tf.integer("view_size", c.train.view_size);
        tf.integer("target_samples", c.train.target_samples);
        tf.integer("log_every", c.train.log_every);
        tf.integer("snapshot_every", c.train.snapshot_every);
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), std::move(base));
}

std::string run_config_to_string(const RunConfig& c) {
    json cams{{"orbit_count", c.cameras.orbit_count},
              {"orbit_distance", c.cameras.orbit_distance},
              {"fov", c.cameras.fov},
              {"width", c.cameras.width},
              {"height", c.cameras.height}};
    json list = json::array();
    for (const Camera& cam : c.cameras.explicit_cameras) list.push_back(write_camera(cam));
    cams["list"] = list;
    json train = write_train_fields(c.train.cfg);
    train["grid_res"] = c.train.grid_res;
    train["views"] = c.train.views;
    train["view_size"] = c.train.view_size;
    train["target_samples"] = c.train.target_samples;
    train["log_every"] = c.train.log_every;
    train["snapshot_every"] = c.train.snapshot_every;
    json j{{"scene", c.scene},
           {"out", c.out},
           {"seed", c.seed},
           {"workers", c.workers},
           {"grid_res", c.grid_res},
           {"samples", c.samples},
           {"ppm_bits", c.ppm_bits},
           {"background", vec(c.background)},
           {"shell_dir", c.shell_dir},
           {"reference", c.reference},
           {"self_compare", c.self_compare},
           {"cameras", cams},
           {"shell", write_shell(c.shell)},
           {"sampling", write_sampling(c.sampling)},
           {"train", train}};
    return j.dump(2) + "\n";
}

std::string train_config_to_string(const TrainConfig& c) {
    json j = write_train_fields(c);
    j["rng_seed"] = c.rng_seed;
    j["background"] = vec(c.background);
    j["shell"] = write_shell(c.shell);
    j["sampling"] = write_sampling(c.sampling);
    return j.dump(2) + "\n";
}

}  // namespace ashell
