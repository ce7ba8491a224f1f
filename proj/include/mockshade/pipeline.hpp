#pragma once

#include <nlohmann/json.hpp>

#include "mockshade/baryshade.hpp"
#include "mockshade/illumination.hpp"
#include "mockshade/scene.hpp"

namespace mockshade {

struct Render {
  IlluminationImage w;
  ColorField styled;    // shade() output over covered pixels, HDR
  ScalarField coverage;  // matte of the visible layer
  ColorField image;     // styled over the background
};

/// Screen-space shading inputs: the scene-wide textures when given, else each
/// pixel takes the control textures of the layer it sees.
ShadingSpec shading_spec(const MockScene& scene, const ScreenLayers& layers);

/// Both stages at time t.
Render render_scene(const MockScene& scene, double t = 0.0);

/// Total illumination (every group, diffuse and specular) times the exposure;
/// the float image exported as the W file.
ColorField exposed_illumination(const IlluminationImage& w);

/// {t, exposure, light_groups, width, height} describing an exported W image.
nlohmann::json w_sidecar(const IlluminationImage& w);

}  // namespace mockshade
