#include "mockshade/demo.hpp"

#include <cmath>

#include "mockshade/image_io.hpp"
#include "mockshade/scene_io.hpp"
#include "mockshade/shadow.hpp"

namespace mockshade {

namespace fs = std::filesystem;

namespace {

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

template <typename Fn>
ScalarField scalar(int n, Fn&& fn) {
  ScalarField f(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) f(x, y) = fn(pixel_center(x, n), pixel_center(y, n));
  }
  return f;
}

template <typename Fn>
ColorField color(int n, Fn&& fn) {
  ColorField f(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) f(x, y) = fn(pixel_center(x, n), pixel_center(y, n));
  }
  return f;
}

// Diagonal hatching over a base colour; `ink` darkens the strokes.
ColorField hatch(int n, const Vec3& base, const Vec3& ink, double spacing, double angle) {
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  return color(n, [&](double u, double v) {
    const double s = (u * ca + v * sa) / spacing;
    const double stroke = smoothstep(0.35, 0.5, std::abs(s - std::floor(s) - 0.5));
    const Vec3 c = base + (ink - base) * (1.0 - stroke);
    return Rgba(c.x(), c.y(), c.z(), 1.0);
  });
}

// Paper-like grain from the counter hash.
ColorField paper(int n, const Vec3& base, double grain, std::uint64_t seed) {
  ColorField f(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double g = (hash_uniform(seed, x / 2, y / 2, 7) - 0.5) * grain;
      f(x, y) = Rgba(base.x() + g, base.y() + g, base.z() + g, 1.0);
    }
  }
  return f;
}

template <typename T>
Channel<T> channel(Field2D<T> data, std::string file) {
  return Channel<T>{ChannelRef{std::move(file)}, std::move(data)};
}

Channel<Rgba> constant(const Rgba& c) {
  return Channel<Rgba>{ChannelRef{std::vector<double>{c[0], c[1], c[2], c[3]}}, ColorField(1, 1, c)};
}

}  // namespace

MockScene demo_scene(int n) {
  MockScene s;
  s.width = n;
  s.height = n;
  s.resolution_explicit = true;

  Layer ground;
  ground.id = "ground";
  ground.shape.kind = ShapeKind::height_field;
  ground.shape.height = channel(scalar(n, [](double u, double v) {
    return 0.006 * std::sin(6.0 * M_PI * u) * std::sin(4.0 * M_PI * v);
  }), "ground_height.pfm");
  ground.shape.matte = Channel<double>{ChannelRef{1.0}, ScalarField(1, 1, 1.0)};
  ground.control_textures = {channel(hatch(n, {0.18, 0.16, 0.3}, {0.05, 0.04, 0.1}, 0.02, 0.8), "ground_t0.pfm"),
                             channel(paper(n, {0.93, 0.86, 0.7}, 0.06, 1), "ground_t1.pfm")};
  ground.material.albedo = constant(Rgba(0.8, 0.78, 0.72, 1.0));

  Layer box;
  box.id = "box";
  box.shape.kind = ShapeKind::height_field;
  auto box_mask = [](double u, double v) {
    return smoothstep(0.28, 0.3, u) * (1.0 - smoothstep(0.48, 0.5, u)) * smoothstep(0.3, 0.32, v) *
           (1.0 - smoothstep(0.53, 0.55, v));
  };
  box.shape.height = channel(scalar(n, [&](double u, double v) { return 0.12 * box_mask(u, v); }),
                             "box_height.pfm");
  box.shape.matte = channel(scalar(n, [&](double u, double v) { return box_mask(u, v) > 0.02 ? 1.0 : 0.0; }),
                            "box_matte.pfm");
  box.control_textures = {channel(hatch(n, {0.35, 0.06, 0.04}, {0.12, 0.02, 0.02}, 0.015, -0.6), "box_t0.pfm"),
                          channel(paper(n, {1.0, 0.62, 0.25}, 0.04, 2), "box_t1.pfm")};
  box.material.albedo = constant(Rgba(0.85, 0.5, 0.3, 1.0));
  box.material.specular_strength = 0.3;
  box.material.shininess = 24.0;

  const Vec2 orb_c(0.7, 0.38);
  const double orb_r = 0.12;
  Layer orb;
  orb.id = "orb";
  orb.c = 0.1;
  orb.shape.kind = ShapeKind::normal_field;
  Vec3Field orb_n(n, n, Vec3(0.0, 0.0, 1.0));
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const Vec2 d = (Vec2(pixel_center(x, n), pixel_center(y, n)) - orb_c) / orb_r;
      const double r2 = d.squaredNorm();
      if (r2 < 1.0) orb_n(x, y) = Vec3(d.x(), d.y(), std::sqrt(1.0 - r2));
    }
  }
  orb.shape.normals = channel(std::move(orb_n), "orb_normals.pfm");
  orb.shape.matte = channel(scalar(n, [&](double u, double v) {
    return (Vec2(u, v) - orb_c).norm() < orb_r ? 1.0 : 0.0;
  }), "orb_matte.pfm");
  orb.control_textures = {channel(hatch(n, {0.02, 0.2, 0.12}, {0.0, 0.06, 0.04}, 0.012, 1.3), "orb_t0.pfm"),
                          channel(paper(n, {0.55, 0.95, 0.6}, 0.05, 3), "orb_t1.pfm")};
  orb.material.albedo = constant(Rgba(0.4, 0.8, 0.5, 1.0));
  orb.material.specular_strength = 0.6;
  orb.material.shininess = 40.0;

  Layer pond;
  pond.id = "pond";
  pond.c = 0.02;
  pond.shape.kind = ShapeKind::normal_field;
  pond.shape.normals = Channel<Vec3>{ChannelRef{std::vector<double>{0.0, 0.0, 1.0}},
                                     Vec3Field(1, 1, Vec3(0.0, 0.0, 1.0))};
  pond.shape.matte = channel(scalar(n, [](double, double v) { return v > 0.7 ? 1.0 : 0.0; }),
                             "pond_matte.pfm");
  pond.control_textures = {channel(hatch(n, {0.02, 0.08, 0.2}, {0.0, 0.02, 0.08}, 0.01, 0.0), "pond_t0.pfm"),
                           channel(paper(n, {0.3, 0.5, 0.75}, 0.03, 4), "pond_t1.pfm")};
  pond.material.albedo = constant(Rgba(0.3, 0.4, 0.5, 1.0));
  pond.material.mirror = PlanarMirror{0.3};

  const Vec2 lens_c(0.18, 0.62);
  const double lens_r = 0.09;
  Layer lens;
  lens.id = "lens";
  lens.c = 0.14;
  lens.shape.kind = ShapeKind::shape_map;
  Vec3Field lens_n(n, n, Vec3(0.0, 0.0, 1.0));
  ScalarField lens_t(n, n, 0.0);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const Vec2 d = (Vec2(pixel_center(x, n), pixel_center(y, n)) - lens_c) / lens_r;
      const double r2 = d.squaredNorm();
      if (r2 >= 1.0) continue;
      lens_n(x, y) = Vec3(0.6 * d.x(), 0.6 * d.y(), 1.0).normalized();
      lens_t(x, y) = 0.08 * (1.0 - r2);
    }
  }
  lens.shape.normals = channel(std::move(lens_n), "lens_normals.pfm");
  lens.shape.thickness = channel(std::move(lens_t), "lens_thickness.pfm");
  lens.shape.matte = channel(scalar(n, [&](double u, double v) {
    return (Vec2(u, v) - lens_c).norm() < lens_r ? 0.9 : 0.0;
  }), "lens_matte.pfm");
  lens.control_textures = {channel(paper(n, {0.1, 0.12, 0.15}, 0.02, 5), "lens_t0.pfm"),
                           channel(paper(n, {0.95, 0.97, 1.0}, 0.02, 6), "lens_t1.pfm")};
  lens.material.albedo = constant(Rgba(0.9, 0.95, 1.0, 1.0));
  lens.material.specular_strength = 0.8;
  lens.material.shininess = 60.0;
  lens.material.transmissive = true;
  lens.material.eta = 1.45;

  s.layers = {std::move(ground), std::move(box), std::move(orb), std::move(pond), std::move(lens)};

  Light key;
  key.kind = LightKind::directional;
  key.direction = direction_from_angles(3.5, 0.75);
  key.intensity = Rgba(1.0, 0.96, 0.9, 1.0);
  Light warm;
  warm.kind = LightKind::point;
  warm.position = Vec3(0.85, 0.15, 0.45);
  warm.intensity = Rgba(0.05, 0.035, 0.02, 1.0);
  warm.group = 1;
  s.lights = {key, warm};

  s.background = channel(color(n, [](double, double v) {
    return Rgba(0.55 + 0.3 * v, 0.65 + 0.2 * v, 0.9, 1.0);
  }), "background.pfm");

  s.shading.basis = WeightBasis::linear();
  s.shading.specular_overlay = OverlayDoc{
      WeightBasis::linear(), {constant(Rgba(0.0, 0.0, 0.0, 0.0)), constant(Rgba(0.5, 0.47, 0.42, 0.0))}};

  conform_channels(s);
  return s;
}

fs::path write_demo_scene(const fs::path& dir, int resolution) {
  fs::create_directories(dir);
  const MockScene s = demo_scene(resolution);
  auto save = [&](const auto& ch) {
    if (ch.ref.is_path()) save_pfm(dir / ch.ref.path(), ch.data);
  };
  auto save_normals = [&](const Channel<Vec3>& ch) {
    if (!ch.ref.is_path()) return;
    save_pfm(dir / ch.ref.path(),
             map(ch.data, [](const Vec3& n) { return Rgba(n.x(), n.y(), n.z(), 1.0); }));
  };
  for (const Layer& l : s.layers) {
    save(l.shape.height);
    save_normals(l.shape.normals);
    save(l.shape.thickness);
    save(l.shape.matte);
    for (const auto& t : l.control_textures) save(t);
  }
  save(*s.background);
  const fs::path scene_path = dir / "scene.json";
  write_file(scene_path, serialize_scene(s).dump(2) + "\n");
  return scene_path;
}

}  // namespace mockshade
