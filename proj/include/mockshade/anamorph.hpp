#pragma once

#include <filesystem>
#include <optional>
#include <variant>

#include <nlohmann/json.hpp>

#include "mockshade/field.hpp"
#include "mockshade/scene.hpp"

namespace mockshade {

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit
  Vec3 at(double t) const { return origin + t * dir; }
};

/// Pinhole (vantage) or frontal orthographic view of an image with the given
/// aspect ratio. Image coordinates are (u, v) in [0,1]^2 with v downwards;
/// the orthographic view covers the unit square of the z = 0 plane.
class ViewCamera {
 public:
  ViewCamera(const Camera& camera, double aspect);

  Ray ray(double u, double v) const;
  /// Image coordinates of a world point; nullopt behind a pinhole.
  std::optional<Vec2> project(const Vec3& p) const;
  /// Direction from p toward the eye.
  Vec3 toward_eye(const Vec3& p) const;
  /// Distance along toward_eye(p) to the eye (infinite for ortho).
  double eye_distance(const Vec3& p) const;

 private:
  Camera camera_;
  double aspect_;
  Vec3 forward_, right_, down_;
  double tan_half_ = 0.0;
};

struct ReceiverHit {
  double t = 0.0;
  Vec2 param = Vec2::Zero();
};

/// Plane n . x = offset, parameterised by an orthonormal in-plane frame.
struct PlaneReceiver {
  Vec3 normal = Vec3(0.0, 0.0, 1.0);
  double offset = 0.0;
};

/// z = height(u, v) over the rectangle [origin, origin + size] of the xy plane.
struct HeightReceiver {
  ScalarField height;
  Vec2 origin = Vec2::Zero();
  Vec2 size = Vec2::Ones();
};

class Receiver {
 public:
  using Shape = std::variant<PlaneReceiver, HeightReceiver>;

  explicit Receiver(Shape shape);
  static Receiver plane(const Vec3& normal, double offset);
  /// Plane through `point` tilted by `angle` about the x axis from z = 0.
  static Receiver slanted_plane(double angle, const Vec3& point);
  static Receiver height_field(ScalarField height, const Vec2& origin, const Vec2& size);

  const Shape& shape() const { return shape_; }
  bool is_plane() const { return std::holds_alternative<PlaneReceiver>(shape_); }

  /// First intersection along the ray (t > 0).
  std::optional<ReceiverHit> intersect(const Ray& ray) const;
  Vec3 point(const Vec2& param) const;
  /// True when the straight path from the surface point at `param` toward the
  /// eye crosses the receiver again.
  bool occluded_from(const Vec2& param, const ViewCamera& view) const;

 private:
  Shape shape_;
  // Plane frame.
  Vec3 e1_ = Vec3::UnitX();
  Vec3 e2_ = Vec3::UnitY();
  Vec3 o_ = Vec3::Zero();
  // Height range of a height field.
  double hmin_ = 0.0;
  double hmax_ = 0.0;

  double surface_z(const Vec2& xy) const;
  double march_step(const Ray& ray) const;
};

struct BakeOptions {
  Filter filter = Filter::bilinear;
  int texture_scale = 2;  // texels per source pixel along each axis
};

/// A picture projected onto a receiver from a vantage point. Receiver
/// parameters in [param_min, param_max] map linearly onto the texture.
struct BakedAnamorph {
  Receiver receiver;
  ColorField texture;
  Vec2 param_min = Vec2::Zero();
  Vec2 param_max = Vec2::Ones();
  Camera vantage;
  int source_width = 0;
  int source_height = 0;
  MaskField occluded;  // texels hidden from the vantage by the receiver itself
  int occluded_count = 0;

  Vec2 texcoord(const Vec2& param) const;
  Vec2 param_at(const Vec2& texcoord) const;
};

BakedAnamorph bake(const ColorField& source, const Camera& vantage, const Receiver& receiver,
                   const BakeOptions& options = {});

/// Ray-casts the receiver from `viewer`; misses are transparent.
ColorField render_view(const BakedAnamorph& baked, const Camera& viewer, int width, int height,
                       Filter filter = Filter::bilinear);

/// PSNR in dB over RGB with peak 1, restricted to pixels where the reference
/// alpha is positive. Infinite for identical images.
double psnr(const ColorField& reference, const ColorField& test);

nlohmann::json receiver_to_json(const Receiver& receiver, const std::string& height_path);
Receiver receiver_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Writes {prefix}.png (16-bit texture) and {prefix}.json; height-field
/// receivers also get {prefix}_height.pfm.
void save_baked(const BakedAnamorph& baked, const std::filesystem::path& prefix);
BakedAnamorph load_baked(const std::filesystem::path& sidecar);

}  // namespace mockshade
