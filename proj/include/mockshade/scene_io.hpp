#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mockshade/scene.hpp"

namespace mockshade {

/// Parses a scene document; relative file references resolve against base_dir.
MockScene parse_scene(const nlohmann::json& document, const std::filesystem::path& base_dir);
MockScene parse_scene(const std::string& text, const std::filesystem::path& base_dir);
MockScene load_scene(const std::filesystem::path& path);

/// Brings every channel to the scene resolution: constant and differently
/// sized fields are resampled, height-field normals are derived and missing
/// matte, normal and albedo channels get their defaults.
void conform_channels(MockScene& scene);
bool channels_conformed(const MockScene& scene);

nlohmann::json serialize_scene(const MockScene& scene);

/// Applies a partial edit (lights, exposure, shading, effects, layer textures)
/// and returns the validated result; the input scene is left untouched.
MockScene apply_patch(const MockScene& scene, const nlohmann::json& patch,
                      const std::filesystem::path& base_dir);

nlohmann::json basis_to_json(const WeightBasis& basis);
WeightBasis basis_from_json(const nlohmann::json& j);

nlohmann::json camera_to_json(const Camera& camera);
Camera camera_from_json(const nlohmann::json& j);

LightPath parse_light_path(const nlohmann::json& j);
nlohmann::json light_path_to_json(const LightPath& path);

}  // namespace mockshade
