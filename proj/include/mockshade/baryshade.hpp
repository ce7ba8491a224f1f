#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "mockshade/basis.hpp"
#include "mockshade/field.hpp"
#include "mockshade/illumination.hpp"
#include "mockshade/scene.hpp"

namespace mockshade {

class ResolutionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonLipschitzBasis : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SpecularOverlay {
  WeightBasis basis;
  std::vector<ColorField> textures;
};

struct ShadingSpec {
  WeightBasis basis;
  std::vector<ColorField> textures;  // one per weight
  WSource w_source;
  std::optional<SpecularOverlay> specular_overlay;
};

/// The scalar image the basis is evaluated on: combined_w, or one group's
/// diffuse or specular plane mapped through the same exposure and clamp.
ScalarField select_w(const IlluminationImage& w_image, const WSource& source);

/// Luminance of the summed specular planes under the image's exposure, clamped.
ScalarField specular_w(const IlluminationImage& w_image);

/// out(p) = sum_i B_i(w(p)) T_i(p), unclamped.
ColorField shade(const ScalarField& w, const WeightBasis& basis,
                 const std::vector<ColorField>& textures);

/// Stage two: styles the selected w plane and adds the specular overlay.
ColorField shade(const IlluminationImage& w_image, const ShadingSpec& spec);

struct Robustness {
  double observed = 0.0;  // max |shade(w1) - shade(w2)| over pixels and channels
  double bound = 0.0;     // L * max|w1 - w2| * max |T_{i+1} - T_i|
  double coarse_bound = 0.0;  // L * max|w1 - w2| * max |T_i| * n_weights
};

/// Lipschitz constant of w -> sum_i B_i(w) T_i per unit texture step:
/// 1 for linear, d for Bezier of degree d.
double lipschitz_constant(const WeightBasis& basis);

Robustness robustness_bound(const ShadingSpec& spec, const ScalarField& w1, const ScalarField& w2);

}  // namespace mockshade
