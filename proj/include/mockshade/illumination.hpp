#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "mockshade/field.hpp"
#include "mockshade/scene.hpp"

namespace mockshade {

/// Which layer each screen pixel sees, and the height fields derived from the
/// layer stack. Surfaces are S = c + z_deform + height; the visible layer is
/// the highest surface with matte > 0, later layers winning ties.
struct ScreenLayers {
  Field2D<int> visible;    // -1 where no layer covers the pixel
  Field2D<int> opaque;     // topmost covering layer that is neither mirror nor transmissive
  std::vector<ScalarField> surface;
  ScalarField shadow_height;  // occluding surface; transmissive layers cast no shadow
};

ScreenLayers resolve_layers(const MockScene& scene);

/// W(u, v, t) with diffuse and specular planes per light group.
struct IlluminationImage {
  double t = 0.0;
  double exposure = 1.0;
  std::vector<ColorField> diffuse;
  std::vector<ColorField> specular;
  ScalarField combined_w;
  std::vector<ScalarField> visibility;  // per light, at the visible surface
  int total_internal_reflections = 0;

  int groups() const { return static_cast<int>(diffuse.size()); }
  /// Sum of every diffuse and specular plane.
  ColorField total() const;
};

/// Stage one: material-free illumination of the visible surfaces at time t.
IlluminationImage compute_w(const MockScene& scene, double t = 0.0);

class NotAMirror : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Screen-space planar reflection. The waterline sits at image row
/// v = 1 - plane_height; a mirror pixel at v below it shows the scene radiance
/// at v' = 2 (1 - plane_height) - v, or the background when v' leaves the
/// image or lands on the mirror itself. Masked by the mirror's matte.
ColorField mirror_reflect(const MockScene& scene, const Layer& mirror_layer, const Camera& camera,
                          double t = 0.0);

/// Image row a mirror pixel in row y reflects (may fall outside [0, rows)),
/// or nullopt when y lies above the waterline.
std::optional<int> mirror_source_row(const PlanarMirror& mirror, int y, int rows);

/// Refracted direction of unit `incident` through a surface with unit normal
/// `normal` going from index 1 into index eta; nullopt on total internal
/// reflection.
std::optional<Vec3> snell_refract(const Vec3& incident, const Vec3& normal, double eta);

/// Schlick's approximation with F0 = ((1 - eta) / (1 + eta))^2; zero for eta = 1.
double schlick_fresnel(double cos_incident, double eta);

struct Refraction {
  ColorField color;    // through the layer's matte
  Vec2Field offset;    // unit-square displacement of the refracted lookup
  ScalarField fresnel;
  MaskField total_internal;
  int total_internal_count = 0;
};

/// Screen-space refraction through a transmissive layer: the view ray bends
/// by Snell's law at the layer normal, travels the layer's gap (thickness for
/// shape maps, otherwise the distance to the opaque surface below) and looks
/// up the radiance there. Fresnel blends in the mirror reflection when the
/// layer is also a mirror.
Refraction refract_offset(const MockScene& scene, const Layer& layer, double eta,
                          const Camera& camera, double t = 0.0);

}  // namespace mockshade
