#pragma once

#include <filesystem>

#include "mockshade/scene.hpp"

namespace mockshade {

/// Still life used by the CLI, the service and the benchmarks: a rippled
/// ground, a box, a normal-mapped orb, a mirror pond, a glass lens, a key
/// light from the upper left and a warm point light.
MockScene demo_scene(int resolution = 256);

/// Writes demo_scene() as scene.json plus PFM/PNG channels into dir and
/// returns the scene file path.
std::filesystem::path write_demo_scene(const std::filesystem::path& dir, int resolution = 256);

}  // namespace mockshade
