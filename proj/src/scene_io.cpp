#include "ashell/scene_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ashell/error.hpp"

namespace ashell {

using nlohmann::json;

namespace {

Vec3 to_vec3(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be an array of 3 numbers");
    Vec3 v;
    for (int a = 0; a < 3; ++a) {
        if (!j[a].is_number()) throw ConfigError(std::string(what) + " must be an array of 3 numbers");
        v[a] = j[a].get<double>();
    }
    return v;
}

json from_vec3(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

double positive(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw ConfigError(std::string("missing numeric field '") + key + "'");
    const double v = j[key].get<double>();
    if (!(v > 0.0)) throw ConfigError(std::string("field '") + key + "' must be > 0");
    return v;
}

Material parse_material(const json& j) {
    Material m;
    if (j.contains("kernel_size")) m.kernel_size = positive(j, "kernel_size");
    if (j.contains("color")) m.color = to_vec3(j["color"], "color");
    return m;
}

void put_material(json& j, const Material& m) {
    j["kernel_size"] = m.kernel_size;
    j["color"] = from_vec3(m.color);
}

SceneNode parse_node(const json& j) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        throw ConfigError("scene node must be an object with a string 'type'");
    }
    const std::string type = j["type"].get<std::string>();
    if (type == "sphere") {
        SphereShape s;
        s.center = to_vec3(j.at("center"), "center");
        s.radius = positive(j, "radius");
        s.material = parse_material(j);
        return {s};
    }
    if (type == "box") {
        BoxShape b;
        b.center = to_vec3(j.at("center"), "center");
        b.half_size = to_vec3(j.at("half_size"), "half_size");
        b.material = parse_material(j);
        return {b};
    }
    if (type == "torus") {
        TorusShape t;
        t.center = to_vec3(j.at("center"), "center");
        t.major_radius = positive(j, "major_radius");
        t.minor_radius = positive(j, "minor_radius");
        t.material = parse_material(j);
        return {t};
    }
    if (type == "union" || type == "intersection") {
        CsgNode csg;
        csg.op = type == "union" ? CsgNode::Op::Union : CsgNode::Op::Intersection;
        if (j.contains("children")) {
            if (!j["children"].is_array()) throw ConfigError("'children' must be an array");
            for (const auto& c : j["children"]) csg.children.push_back(parse_node(c));
        }
        return {std::move(csg)};
    }
    throw ConfigError("unknown scene node type '" + type + "'");
}

json node_to_json(const SceneNode& node) {
    struct Visitor {
        json operator()(const SphereShape& s) const {
            json j{{"type", "sphere"}, {"center", from_vec3(s.center)}, {"radius", s.radius}};
            put_material(j, s.material);
            return j;
        }
        json operator()(const BoxShape& b) const {
            json j{{"type", "box"}, {"center", from_vec3(b.center)}, {"half_size", from_vec3(b.half_size)}};
            put_material(j, b.material);
            return j;
        }
        json operator()(const TorusShape& t) const {
            json j{{"type", "torus"},
                   {"center", from_vec3(t.center)},
                   {"major_radius", t.major_radius},
                   {"minor_radius", t.minor_radius}};
            put_material(j, t.material);
            return j;
        }
        json operator()(const CsgNode& c) const {
            json children = json::array();
            for (const auto& child : c.children) children.push_back(node_to_json(child));
            return {{"type", c.op == CsgNode::Op::Union ? "union" : "intersection"}, {"children", children}};
        }
    };
    return std::visit(Visitor{}, node.shape);
}

}  // namespace

AnalyticScene parse_scene(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scene file is not valid JSON: ") + e.what());
    }
    try {
        if (!doc.contains("domain")) throw ConfigError("scene file lacks a 'domain' table");
        const Aabb domain{to_vec3(doc["domain"].at("min"), "domain.min"), to_vec3(doc["domain"].at("max"), "domain.max")};
        if (!doc.contains("root")) throw ConfigError("scene file lacks a 'root' node");
        return AnalyticScene(parse_node(doc["root"]), domain);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed scene file: ") + e.what());
    }
}

std::string scene_to_string(const AnalyticScene& scene) {
    json doc{{"domain", {{"min", from_vec3(scene.domain().lo)}, {"max", from_vec3(scene.domain().hi)}}},
             {"root", node_to_json(scene.root())}};
    return doc.dump(2) + "\n";
}

AnalyticScene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read scene file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str());
}

void save_scene(const std::filesystem::path& path, const AnalyticScene& scene) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scene file: " + path.string());
    out << scene_to_string(scene);
}

}  // namespace ashell
