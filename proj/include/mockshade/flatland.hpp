#pragma once

#include <variant>
#include <vector>

#include "mockshade/field.hpp"

namespace mockshade {

/// A 2D world seen by a 1D camera looking straight down.
struct FlatBox {
  double x0 = 0.0;
  double x1 = 0.0;
  double height = 0.0;
};

struct FlatDirectional {
  double elevation = M_PI / 4;  // above the ground line
  bool from_left = true;
};

struct FlatPoint {
  double x = 0.0;
  double z = 1.0;
};

struct FlatScene {
  double length = 1.0;
  /// Piecewise-linear ground (x ascending); empty means z = 0.
  std::vector<Vec2> ground;
  std::vector<FlatBox> occluders;
  std::variant<FlatDirectional, FlatPoint> light = FlatDirectional{};

  double ground_at(double x) const;
  /// Height of the first surface seen from above at x.
  double surface_at(double x) const;
};

struct FlatImage {
  std::vector<double> radiance;   // visibility * max(0, n.l) * falloff
  std::vector<bool> shadow_mask;  // cast shadow at the sample
  std::vector<double> surface;    // surface height per sample
};

/// Exact ray casting against every occluder segment and the ground polyline,
/// one sample per pixel centre.
FlatImage flatland_render(const FlatScene& scene, int image_width);

/// Intersection over union of two masks; 1 when both are empty.
double mask_iou(const std::vector<bool>& a, const std::vector<bool>& b);

}  // namespace mockshade
