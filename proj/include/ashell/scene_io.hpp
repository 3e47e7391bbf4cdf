#pragma once

#include <filesystem>
#include <string>

#include "ashell/field.hpp"

namespace ashell {

/// Scene description files are JSON documents:
///
///   {
///     "domain": {"min": [-1, -1, -1], "max": [1, 1, 1]},
///     "root": {"type": "union", "children": [
///       {"type": "sphere", "center": [0, 0, 0], "radius": 0.5,
///        "kernel_size": 0.001, "color": [0.9, 0.4, 0.2]},
///       {"type": "box", "center": [..], "half_size": [..], "kernel_size": .., "color": [..]},
///       {"type": "torus", "center": [..], "major_radius": .., "minor_radius": .., ...},
///       {"type": "intersection", "children": [ ... ]}
///     ]}
///   }
///
/// `kernel_size` and `color` are optional on primitives (defaults 0.01 and 0.8 grey).
/// Numbers are written with round-trip precision, so save -> load is lossless.
AnalyticScene parse_scene(const std::string& text);
std::string scene_to_string(const AnalyticScene& scene);

AnalyticScene load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const AnalyticScene& scene);

}  // namespace ashell
