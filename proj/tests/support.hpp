#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mockshade/anamorph.hpp"
#include "mockshade/demo.hpp"
#include "mockshade/flatland.hpp"
#include "mockshade/scene.hpp"
#include "mockshade/scene_io.hpp"

namespace mockshade::testing {

template <typename T>
Channel<T> inline_channel(Field2D<T> data) {
  return Channel<T>{ChannelRef{}, std::move(data)};
}

inline Channel<double> constant_scalar(double v) {
  return Channel<double>{ChannelRef{v}, ScalarField(1, 1, v)};
}

inline Channel<Rgba> constant_color(const Rgba& c) {
  return Channel<Rgba>{ChannelRef{std::vector<double>{c[0], c[1], c[2], c[3]}}, ColorField(1, 1, c)};
}

template <typename Fn>
ScalarField scalar_field(int w, int h, Fn&& fn) {
  ScalarField f(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f(x, y) = fn(pixel_center(x, w), pixel_center(y, h));
  }
  return f;
}

template <typename Fn>
ColorField color_field(int w, int h, Fn&& fn) {
  ColorField f(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f(x, y) = fn(pixel_center(x, w), pixel_center(y, h));
  }
  return f;
}

inline ColorField noise_texture(int w, int h, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ColorField f(w, h);
  for (auto& c : f.values()) c = Rgba(u(rng), u(rng), u(rng), 1.0);
  return f;
}

inline Layer flat_layer(const std::string& id, int n, double c = 0.0) {
  Layer l;
  l.id = id;
  l.c = c;
  l.shape.kind = ShapeKind::height_field;
  l.shape.height = inline_channel(ScalarField(n, n, 0.0));
  l.shape.matte = constant_scalar(1.0);
  l.material.albedo = constant_color(Rgba(0.8, 0.8, 0.8, 1.0));
  l.control_textures = {constant_color(Rgba(0.05, 0.05, 0.1, 1.0)),
                        constant_color(Rgba(0.95, 0.9, 0.8, 1.0))};
  return l;
}

/// Height-field layer holding an axis-aligned box of the given height; the
/// matte covers the box footprint only.
inline Layer box_layer(const std::string& id, int n, double u0, double u1, double v0, double v1,
                       double height) {
  auto inside = [=](double u, double v) { return u >= u0 && u <= u1 && v >= v0 && v <= v1; };
  Layer l = flat_layer(id, n);
  l.shape.height = inline_channel(scalar_field(n, n, [&](double u, double v) {
    return inside(u, v) ? height : 0.0;
  }));
  l.shape.matte = inline_channel(scalar_field(n, n, [&](double u, double v) {
    return inside(u, v) ? 1.0 : 0.0;
  }));
  return l;
}

inline Light directional_light(double azimuth, double elevation, double intensity = 1.0, int group = 0) {
  Light l;
  l.kind = LightKind::directional;
  l.direction = direction_from_angles(azimuth, elevation);
  l.intensity = Rgba(intensity, intensity, intensity, 1.0);
  l.group = group;
  return l;
}

/// Ground plus one box lit by a single directional light.
inline MockScene box_scene(int n, double u0, double u1, double v0, double v1, double height,
                           const Light& light) {
  MockScene s;
  s.width = n;
  s.height = n;
  s.resolution_explicit = true;
  s.layers = {flat_layer("ground", n), box_layer("box", n, u0, u1, v0, v1, height)};
  s.lights = {light};
  s.shading.basis = WeightBasis::linear();
  conform_channels(s);
  return s;
}

/// Randomised still life: a rippled ground, boxes, optionally a mirror pond,
/// a transmissive lens, an area light, caustics and bleed. Layer control
/// textures match the chosen basis.
inline MockScene random_scene(std::uint32_t seed, int n) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MockScene s;
  s.width = n;
  s.height = n;
  s.resolution_explicit = true;

  const int degree = std::uniform_int_distribution<int>(1, 4)(rng);
  s.shading.basis = degree == 1 ? WeightBasis::linear() : WeightBasis::bezier(degree);
  const int nw = s.shading.basis.n_weights();
  auto textures = [&]() {
    std::vector<Channel<Rgba>> t;
    for (int i = 0; i < nw; ++i) t.push_back(inline_channel(noise_texture(n, n, rng)));
    return t;
  };

  Layer ground = flat_layer("ground", n);
  const double amp = 0.01 * u(rng);
  const double fu = 2.0 + 6.0 * u(rng);
  ground.shape.height = inline_channel(scalar_field(n, n, [&](double x, double y) {
    return amp * std::sin(fu * M_PI * x) * std::cos(3.0 * M_PI * y);
  }));
  ground.material.albedo = constant_color(Rgba(0.5 + 0.5 * u(rng), 0.5 + 0.5 * u(rng), 0.6, 1.0));
  ground.control_textures = textures();
  s.layers.push_back(std::move(ground));

  const int boxes = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int b = 0; b < boxes; ++b) {
    const double u0 = 0.1 + 0.6 * u(rng);
    const double v0 = 0.1 + 0.5 * u(rng);
    Layer box = box_layer("box" + std::to_string(b), n, u0, u0 + 0.08 + 0.15 * u(rng), v0,
                          v0 + 0.08 + 0.15 * u(rng), 0.03 + 0.15 * u(rng));
    box.material.specular_strength = u(rng);
    box.material.shininess = 8.0 + 40.0 * u(rng);
    box.material.albedo = constant_color(Rgba(u(rng), u(rng), u(rng), 1.0));
    box.control_textures = textures();
    if (u(rng) < 0.3) {
      box.material.caustic = Caustic{inline_channel(color_field(n, n, [&](double x, double y) {
        const double r = 0.1 * (0.5 + 0.5 * std::sin(40.0 * x + 30.0 * y));
        return Rgba(r, r, 0.5 * r, 0.0);
      })), 0};
    }
    s.layers.push_back(std::move(box));
  }

  if (u(rng) < 0.5) {
    Layer pond = flat_layer("pond", n, 0.01);
    pond.shape.kind = ShapeKind::normal_field;
    pond.shape.height = {};
    pond.shape.normals = Channel<Vec3>{ChannelRef{std::vector<double>{0.0, 0.0, 1.0}},
                                       Vec3Field(1, 1, Vec3(0.0, 0.0, 1.0))};
    const double line = 0.65 + 0.2 * u(rng);
    pond.shape.matte = inline_channel(scalar_field(n, n, [&](double, double y) { return y > line ? 1.0 : 0.0; }));
    pond.material.mirror = PlanarMirror{1.0 - line};
    pond.control_textures = textures();
    s.layers.push_back(std::move(pond));
  }

  if (u(rng) < 0.5) {
    const Vec2 c(0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng));
    const double r = 0.06 + 0.06 * u(rng);
    Layer lens = flat_layer("lens", n, 0.2);
    lens.shape.kind = ShapeKind::shape_map;
    lens.shape.height = {};
    Vec3Field normals(n, n, Vec3(0.0, 0.0, 1.0));
    ScalarField thickness(n, n, 0.0);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const Vec2 d = (Vec2(pixel_center(x, n), pixel_center(y, n)) - c) / r;
        if (d.squaredNorm() >= 1.0) continue;
        normals(x, y) = Vec3(0.5 * d.x(), 0.5 * d.y(), 1.0).normalized();
        thickness(x, y) = 0.05 * (1.0 - d.squaredNorm());
      }
    }
    lens.shape.normals = inline_channel(std::move(normals));
    lens.shape.thickness = inline_channel(std::move(thickness));
    lens.shape.matte = inline_channel(scalar_field(n, n, [&](double x, double y) {
      return (Vec2(x, y) - c).norm() < r ? 0.85 : 0.0;
    }));
    lens.material.transmissive = true;
    lens.material.eta = 1.2 + 0.5 * u(rng);
    lens.material.specular_strength = 0.5;
    lens.control_textures = textures();
    s.layers.push_back(std::move(lens));
  }

  s.lights.push_back(directional_light(2.0 * M_PI * u(rng), 0.3 + 0.9 * u(rng)));
  if (u(rng) < 0.5) {
    Light p;
    p.kind = LightKind::point;
    p.position = Vec3(u(rng), u(rng), 0.4 + 0.4 * u(rng));
    p.intensity = Rgba(0.1, 0.08, 0.05, 1.0);
    p.group = 1;
    s.lights.push_back(p);
  }
  if (u(rng) < 0.4) {
    Light a;
    a.kind = LightKind::area_rect;
    a.position = Vec3(u(rng), u(rng), 0.6);
    a.direction = Vec3(0.0, 0.0, -1.0);
    a.extent = Vec2(0.2, 0.2);
    a.intensity = Rgba(0.2, 0.2, 0.2, 1.0);
    a.group = static_cast<int>(s.lights.size()) % 2;
    s.effects.area_samples = 4;
    s.lights.push_back(a);
  }
  if (u(rng) < 0.5) s.effects.bleed = 0.2 * u(rng);
  if (u(rng) < 0.5) {
    s.background = inline_channel(color_field(n, n, [](double, double y) { return Rgba(0.5, 0.6, 0.9 - 0.3 * y, 1.0); }));
  }
  conform_channels(s);
  return s;
}

/// The scenes every corpus-wide property runs over: the demo still life plus
/// randomised scenes.
inline std::vector<MockScene> corpus(int n, int random_count = 8) {
  std::vector<MockScene> out{demo_scene(n)};
  for (int i = 0; i < random_count; ++i) out.push_back(random_scene(1000u + i, n));
  return out;
}

/// Heights of 1D boxes extruded along v, sampled at pixel centres.
inline ScalarField extruded_boxes(int n, const std::vector<FlatBox>& boxes) {
  return scalar_field(n, n, [&](double u, double) {
    double z = 0.0;
    for (const FlatBox& b : boxes) {
      if (u >= b.x0 && u <= b.x1) z = std::max(z, b.height);
    }
    return z;
  });
}

struct BoundaryAgreement {
  int boundaries = 0;     // transitions in the oracle mask
  int disagreements = 0;
  bool ok = true;         // every disagreement sits next to a distinct boundary
};

/// Compares a mask against an oracle mask, tolerating at most one pixel of
/// disagreement on either side of each oracle transition.
inline BoundaryAgreement compare_masks(const std::vector<bool>& test, const std::vector<bool>& oracle) {
  BoundaryAgreement r;
  const int n = static_cast<int>(oracle.size());
  std::vector<int> used(n + 1, 0);  // per transition slot k (between k-1 and k)
  for (int k = 1; k < n; ++k) r.boundaries += oracle[k] != oracle[k - 1];
  for (int i = 0; i < n; ++i) {
    if (test[i] == oracle[i]) continue;
    ++r.disagreements;
    const bool left = i > 0 && oracle[i] != oracle[i - 1];
    const bool right = i + 1 < n && oracle[i] != oracle[i + 1];
    int slot = -1;
    if (left && !used[i]) slot = i;
    else if (right && !used[i + 1]) slot = i + 1;
    if (slot < 0) {
      r.ok = false;
    } else {
      used[slot] = 1;
    }
  }
  return r;
}

/// Two-colour checker, optionally anti-aliased by a Gaussian of width sigma
/// pixels.
inline ColorField checker_image(int n, int squares, double sigma) {
  ColorField c(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double v = ((x * squares / n + y * squares / n) % 2) ? 0.9 : 0.1;
      c(x, y) = Rgba(v, 0.8 * v, 1.0 - v, 1.0);
    }
  }
  return sigma > 0.0 ? gaussian_blur(c, sigma) : c;
}

inline Camera vantage_camera() {
  Camera v;
  v.kind = CameraKind::vantage;
  v.eye = Vec3(0.5, 1.3, 1.8);
  v.look_at = Vec3(0.5, 0.5, 0.0);
  v.fov_y = 0.5;
  return v;
}

/// The vantage eye swung by `angle` about the vertical through its target.
inline Camera swung_camera(const Camera& c, double angle) {
  Camera out = c;
  const Vec3 d = c.eye - c.look_at;
  out.eye = c.look_at + Vec3(d.x() * std::cos(angle) - d.y() * std::sin(angle),
                             d.x() * std::sin(angle) + d.y() * std::cos(angle), d.z());
  return out;
}

/// Rolling hills over [-1, 2]^2, wide enough to fill the vantage view.
inline Receiver hills_receiver(int n) {
  ScalarField h = scalar_field(n, n, [](double u, double v) {
    return 0.15 * std::sin(2.0 * M_PI * u) * std::cos(M_PI * v);
  });
  return Receiver::height_field(std::move(h), Vec2(-1.0, -1.0), Vec2(3.0, 3.0));
}

/// Fresh directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mockshade_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mockshade::testing
