#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mockshade/basis.hpp"
#include "mockshade/field.hpp"

namespace mockshade {

/// Where a channel's data came from: a file path, a scalar constant, or a
/// constant vector. Kept alongside the loaded field so scenes serialise back
/// to the document they were parsed from.
struct ChannelRef {
  std::variant<std::monostate, std::string, double, std::vector<double>> source;

  bool is_path() const { return std::holds_alternative<std::string>(source); }
  const std::string& path() const { return std::get<std::string>(source); }
  friend bool operator==(const ChannelRef&, const ChannelRef&) = default;
};

template <typename T>
struct Channel {
  ChannelRef ref;
  Field2D<T> data;
  friend bool operator==(const Channel&, const Channel&) = default;
};

enum class ShapeKind { height_field, normal_field, shape_map };

struct ShapeChannel {
  ShapeKind kind = ShapeKind::height_field;
  Channel<double> height;     // height_field only
  Channel<Vec3> normals;      // normal_field and shape_map; derived for height_field
  Channel<double> thickness;  // shape_map only
  Channel<double> matte;
  friend bool operator==(const ShapeChannel&, const ShapeChannel&) = default;
};

struct PlanarMirror {
  double plane_height = 0.0;
  friend bool operator==(const PlanarMirror&, const PlanarMirror&) = default;
};

struct Caustic {
  Channel<Rgba> texture;
  int group = 0;
  friend bool operator==(const Caustic&, const Caustic&) = default;
};

struct Material {
  Channel<Rgba> albedo;
  double specular_strength = 0.0;
  double shininess = 16.0;
  std::optional<PlanarMirror> mirror;
  bool transmissive = false;
  double eta = 1.5;
  std::optional<Caustic> caustic;
  friend bool operator==(const Material&, const Material&) = default;
};

/// A mock-3D layer: the unit square P(u, v) = (u, v, c) carrying a proxy
/// shape, control textures and a basic material.
struct Layer {
  std::string id;
  double c = 0.0;
  std::optional<Channel<double>> z_deform;
  ShapeChannel shape;
  std::vector<Channel<Rgba>> control_textures;
  Material material;
  friend bool operator==(const Layer&, const Layer&) = default;
};

enum class LightKind { directional, point, area_rect };

struct Light {
  LightKind kind = LightKind::directional;
  Vec3 direction = Vec3(0.0, 0.0, -1.0);  // travel direction, unit
  Vec3 position = Vec3::Zero();
  Vec2 extent = Vec2::Zero();
  Rgba intensity = Rgba::Ones();
  int group = 0;
  friend bool operator==(const Light&, const Light&) = default;
};

/// Travel direction of a directional light arriving from (azimuth, elevation);
/// azimuth is measured in the layer plane from +u towards +v.
Vec3 direction_from_angles(double azimuth, double elevation);

enum class CameraKind { ortho_frontal, vantage };

struct Camera {
  CameraKind kind = CameraKind::ortho_frontal;
  Vec3 eye = Vec3(0.5, 0.5, 2.0);
  Vec3 look_at = Vec3(0.5, 0.5, 0.0);
  double fov_y = 0.5;
  friend bool operator==(const Camera&, const Camera&) = default;
};

struct LightKey {
  double t = 0.0;
  int light_index = 0;
  std::optional<Vec3> position;
  std::optional<Vec3> direction;
  std::optional<Rgba> intensity;
  friend bool operator==(const LightKey&, const LightKey&) = default;
};

/// Keyframed light animation, linearly interpolated per light and clamped
/// outside the key range.
struct LightPath {
  std::vector<LightKey> keys;
  friend bool operator==(const LightPath&, const LightPath&) = default;
};

struct WSource {
  bool combined = true;
  int group = 0;
  bool specular = false;
  friend bool operator==(const WSource&, const WSource&) = default;
};

struct OverlayDoc {
  WeightBasis basis;
  std::vector<Channel<Rgba>> textures;
  friend bool operator==(const OverlayDoc&, const OverlayDoc&) = default;
};

/// The `shading` block of a scene document. Empty `textures` means the
/// per-layer control textures are used.
struct ShadingDoc {
  WeightBasis basis;
  std::vector<Channel<Rgba>> textures;
  WSource w_source;
  std::optional<OverlayDoc> specular_overlay;
  friend bool operator==(const ShadingDoc&, const ShadingDoc&) = default;
};

struct Effects {
  bool shadows = true;
  bool reflections = true;
  bool refraction = true;
  double bleed = 0.0;
  int area_samples = 16;
  friend bool operator==(const Effects&, const Effects&) = default;
};

struct MockScene {
  int width = 0;
  int height = 0;
  bool resolution_explicit = false;
  std::vector<Layer> layers;  // back to front
  std::vector<Light> lights;
  Camera camera;
  std::optional<Channel<Rgba>> background;
  ShadingDoc shading;
  std::optional<double> exposure;
  Effects effects;
  std::optional<LightPath> light_path;
  friend bool operator==(const MockScene&, const MockScene&) = default;

  int find_layer(const std::string& id) const;
  /// Scene exposure, or 1 / (sum of light luminances) when unset.
  double resolved_exposure() const;
  int light_group_count() const;
  /// Lights with the light path applied at time t.
  std::vector<Light> lights_at(double t) const;
};

enum class IssueCode { schema, missing_channel, bad_reference, invariant_violation };

const char* to_string(IssueCode code);

struct SceneIssue {
  IssueCode code;
  std::string layer_id;  // empty for scene-level issues
  std::string path;      // JSON pointer-like location, e.g. layers/0/textures/1
  std::string message;
};

/// Every problem found while parsing or validating a scene document.
class SceneError : public std::runtime_error {
 public:
  explicit SceneError(std::vector<SceneIssue> issues);
  const std::vector<SceneIssue>& issues() const { return issues_; }
  bool has(IssueCode code) const;

 private:
  std::vector<SceneIssue> issues_;
};

/// Structural invariants of a loaded scene, one issue per violation.
std::vector<SceneIssue> validate_scene(const MockScene& scene);

}  // namespace mockshade
