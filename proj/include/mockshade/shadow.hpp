#pragma once

#include <cstdint>

#include "mockshade/field.hpp"
#include "mockshade/scene.hpp"

namespace mockshade {

/// Counter-based hash giving a uniform double in [0,1); identical for the
/// same key regardless of evaluation order.
double hash_uniform(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d);

/// Stratified sample positions on an area light for one pixel.
Vec3 area_light_sample(const Light& light, int sample, int samples, std::uint64_t pixel,
                       std::uint64_t light_id);

/// Precomputed height field used for occlusion queries. Positions are in
/// unit-square units; heights in the same units.
class HeightOccluder {
 public:
  explicit HeightOccluder(const ScalarField& height);

  /// True when the ray from the surface point of pixel (x, y) at height z
  /// toward the light is blocked by the height field.
  bool occluded_directional(int x, int y, double z, const Vec3& to_light) const;
  bool occluded_point(int x, int y, double z, const Vec3& target) const;

  const ScalarField& height() const { return height_; }
  double max_height() const { return max_height_; }

 private:
  bool march(int x, int y, double z, const Vec3& dir_pixels, double max_steps) const;
  double at(int major, double minor, bool major_is_x) const;

  ScalarField height_;
  double max_height_;
};

/// Per-pixel visibility toward the light in [0,1]: hard for directional and
/// point lights, the mean over `samples` stratified light positions for area
/// lights. Rays march one pixel per step along the dominant axis with linear
/// height interpolation.
ScalarField cast_shadow(const ScalarField& height, const Light& light, int samples = 16);

}  // namespace mockshade
