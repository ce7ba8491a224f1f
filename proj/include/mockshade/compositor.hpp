#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mockshade/baryshade.hpp"
#include "mockshade/field.hpp"
#include "mockshade/scene.hpp"

namespace mockshade {

/// Isolated effect of virtual objects on a proxy scene. Colours are
/// premultiplied by their mattes.
struct ImpactSet {
  ColorField object_color;
  ScalarField object_matte;
  ScalarField shadow;      // occlusion fraction on proxy receivers
  ColorField reflection;
  std::optional<ColorField> refraction;

  static ImpactSet empty(int width, int height);
};

struct CompositeRecipe {
  ColorField background;
  std::vector<ImpactSet> impacts;  // applied in order
  double shadow_strength = 1.0;
  Vec3 shadow_tint = Vec3::Zero();
};

class UnknownLayer : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per impact: darken by the tinted shadow, add the reflection, lay the
/// refraction over, then the object over the result.
ColorField composite(const CompositeRecipe& recipe);

/// One impact equivalent to applying `lower` then `upper` when their mattes
/// and shadows do not overlap.
ImpactSet merge_impacts(const ImpactSet& lower, const ImpactSet& upper);

/// Impact of the listed layers on the remaining (proxy) layers: difference
/// shadows on proxy surfaces, reflections of the virtual layers in proxy
/// mirrors, and the virtual layers rendered on their own.
ImpactSet render_impacts(const MockScene& scene, const std::set<std::string>& virtual_ids,
                         double t = 0.0);

/// Recipe document: {"background": path, "impacts": [{"object_color",
/// "object_matte", "shadow", "reflection", "refraction", "refraction_matte"}],
/// "shadow_strength", "shadow_tint"}. Planes are PNG or PFM; missing planes
/// are zero. PFM colour has no alpha: the object colour takes object_matte and
/// the refraction takes refraction_matte.
CompositeRecipe load_recipe(const std::filesystem::path& path);
CompositeRecipe parse_recipe(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Writes every plane next to `prefix` and returns the recipe document
/// referencing them.
nlohmann::json save_impacts(const ImpactSet& impacts, const std::filesystem::path& prefix);

}  // namespace mockshade
