#include "mockshade/illumination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mockshade/parallel.hpp"
#include "mockshade/scene_io.hpp"
#include "mockshade/shadow.hpp"

namespace mockshade {

ColorField IlluminationImage::total() const {
  ColorField out(combined_w.width(), combined_w.height(), Rgba::Zero());
  for (std::size_t g = 0; g < diffuse.size(); ++g) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += diffuse[g][i] + specular[g][i];
  }
  return out;
}

namespace {

double layer_surface(const Layer& l, int x, int y) {
  double z = l.c;
  if (l.z_deform && !l.z_deform->data.empty()) z += l.z_deform->data(x, y);
  if (l.shape.kind == ShapeKind::height_field && !l.shape.height.data.empty()) {
    z += l.shape.height.data(x, y);
  }
  return z;
}

}  // namespace

ScreenLayers resolve_layers(const MockScene& scene) {
  const int w = scene.width;
  const int h = scene.height;
  const int n = static_cast<int>(scene.layers.size());
  ScreenLayers out{Field2D<int>(w, h, -1), Field2D<int>(w, h, -1), {}, ScalarField(w, h, 0.0)};
  double floor_height = 0.0;
  out.surface.reserve(n);
  for (const Layer& l : scene.layers) {
    ScalarField s(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        s(x, y) = layer_surface(l, x, y);
        floor_height = std::min(floor_height, s(x, y));
      }
    }
    out.surface.push_back(std::move(s));
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best = -std::numeric_limits<double>::infinity();
      double best_opaque = best;
      double shadow = -std::numeric_limits<double>::infinity();
      for (int li = 0; li < n; ++li) {
        const Layer& l = scene.layers[li];
        if (!(l.shape.matte.data(x, y) > 0.0)) continue;
        const double s = out.surface[li](x, y);
        if (s >= best) {
          best = s;
          out.visible(x, y) = li;
        }
        if (!l.material.transmissive) {
          shadow = std::max(shadow, s);
          if (!l.material.mirror && s >= best_opaque) {
            best_opaque = s;
            out.opaque(x, y) = li;
          }
        }
      }
      out.shadow_height(x, y) = std::isfinite(shadow) ? shadow : floor_height;
    }
  }
  return out;
}

namespace {

struct RefractSample {
  Vec2 offset = Vec2::Zero();
  double fresnel = 0.0;
  bool total_internal = false;
};

// Shared state for one evaluation of the illumination stage.
class Stage {
 public:
  Stage(const MockScene& scene, double t)
      : s_(scene),
        w_(scene.width),
        h_(scene.height),
        groups_(scene.light_group_count()),
        lights_(scene.lights_at(t)),
        layers_(resolve_layers(scene)),
        occluder_(layers_.shadow_height) {}

  int width() const { return w_; }
  int height() const { return h_; }
  int groups() const { return groups_; }
  const ScreenLayers& layers() const { return layers_; }
  const std::vector<Light>& lights() const { return lights_; }

  Vec3 view_dir(const Vec3& p) const {
    if (s_.camera.kind == CameraKind::ortho_frontal) return Vec3(0.0, 0.0, 1.0);
    const Vec3 d = s_.camera.eye - p;
    const double len = d.norm();
    return len > 0.0 ? Vec3(d / len) : Vec3(0.0, 0.0, 1.0);
  }

  Vec3 surface_point(int li, int x, int y) const {
    return Vec3(pixel_center(x, w_), pixel_center(y, h_), layers_.surface[li](x, y));
  }

  Rgba background(int x, int y) const {
    if (!s_.background) return Rgba::Zero();
    return s_.background->data(std::clamp(x, 0, w_ - 1), std::clamp(y, 0, h_ - 1));
  }

  // Direct light on layer li at pixel (x, y), accumulated per group.
  void direct(int li, int x, int y, Rgba* diffuse, Rgba* specular, double* visibility) const {
    const Layer& layer = s_.layers[li];
    const Vec3 n = layer.shape.normals.data(x, y);
    const Vec3 p = surface_point(li, x, y);
    const Vec3 view = view_dir(p);
    const double ks = layer.material.specular_strength;
    const double shininess = layer.material.shininess;
    const bool shadows = s_.effects.shadows;
    const std::uint64_t pixel = static_cast<std::uint64_t>(y) * w_ + x;

    auto add = [&](const Light& light, const Vec3& l, double vis, double scale) {
      const double ndl = n.dot(l);
      if (vis <= 0.0 || ndl <= 0.0) return;
      diffuse[light.group] += (vis * ndl * scale) * light.intensity;
      if (ks > 0.0) {
        const Vec3 half = (l + view).normalized();
        const double ndh = std::max(0.0, n.dot(half));
        specular[light.group] += (vis * std::pow(ndh, shininess) * ks * scale) * light.intensity;
      }
    };

    for (std::size_t k = 0; k < lights_.size(); ++k) {
      const Light& light = lights_[k];
      double vis_mean = 1.0;
      switch (light.kind) {
        case LightKind::directional: {
          const Vec3 l = -light.direction;
          const double vis =
              shadows && occluder_.occluded_directional(x, y, p.z(), l) ? 0.0 : 1.0;
          add(light, l, vis, 1.0);
          vis_mean = vis;
          break;
        }
        case LightKind::point: {
          const Vec3 to = light.position - p;
          const double d2 = to.squaredNorm();
          if (d2 <= 0.0) break;
          const double vis = shadows && occluder_.occluded_point(x, y, p.z(), light.position) ? 0.0 : 1.0;
          add(light, to / std::sqrt(d2), vis, 1.0 / d2);
          vis_mean = vis;
          break;
        }
        case LightKind::area_rect: {
          const int samples = std::max(1, s_.effects.area_samples);
          int visible = 0;
          for (int i = 0; i < samples; ++i) {
            const Vec3 q = area_light_sample(light, i, samples, pixel, k);
            const Vec3 to = q - p;
            const double d2 = to.squaredNorm();
            if (d2 <= 0.0) continue;
            const double vis = shadows && occluder_.occluded_point(x, y, p.z(), q) ? 0.0 : 1.0;
            visible += vis > 0.0;
            add(light, to / std::sqrt(d2), vis, 1.0 / (d2 * samples));
          }
          vis_mean = static_cast<double>(visible) / samples;
          break;
        }
      }
      if (visibility) visibility[k] = vis_mean;
    }
  }

  // Pass 1: radiance of the opaque surface at every pixel (albedo applied),
  // and the direct light on the visible surface.
  void light_surfaces() {
    radiance_.assign(groups_, ColorField(w_, h_, Rgba::Zero()));
    direct_diffuse_.assign(groups_, ColorField(w_, h_, Rgba::Zero()));
    direct_specular_.assign(groups_, ColorField(w_, h_, Rgba::Zero()));
    visibility_.assign(lights_.size(), ScalarField(w_, h_, 1.0));
    parallel_rows(h_, [&](int y) {
      std::vector<Rgba> d(groups_), sp(groups_), d2(groups_), sp2(groups_);
      std::vector<double> vis(lights_.size(), 1.0);
      for (int x = 0; x < w_; ++x) {
        const int o = layers_.opaque(x, y);
        const int v = layers_.visible(x, y);
        std::fill(d.begin(), d.end(), Rgba::Zero());
        std::fill(sp.begin(), sp.end(), Rgba::Zero());
        std::fill(vis.begin(), vis.end(), 1.0);
        if (o >= 0) {
          direct(o, x, y, d.data(), sp.data(), v == o ? vis.data() : nullptr);
          const Material& m = s_.layers[o].material;
          if (m.caustic) {
            d[m.caustic->group] += m.caustic->texture.data(x, y) * s_.layers[o].shape.matte.data(x, y);
          }
          const Rgba albedo = m.albedo.data(x, y);
          for (int g = 0; g < groups_; ++g) {
            radiance_[g](x, y) = albedo.cwiseProduct(d[g] + sp[g]);
          }
        } else {
          radiance_[0](x, y) = background(x, y);
        }
        if (v < 0) continue;
        if (v != o) {
          std::fill(d.begin(), d.end(), Rgba::Zero());
          std::fill(sp.begin(), sp.end(), Rgba::Zero());
          direct(v, x, y, d.data(), sp.data(), vis.data());
          const Material& m = s_.layers[v].material;
          if (m.caustic) {
            d[m.caustic->group] += m.caustic->texture.data(x, y) * s_.layers[v].shape.matte.data(x, y);
          }
        }
        for (int g = 0; g < groups_; ++g) {
          direct_diffuse_[g](x, y) = d[g];
          direct_specular_[g](x, y) = sp[g];
        }
        for (std::size_t k = 0; k < lights_.size(); ++k) visibility_[k](x, y) = vis[k];
      }
    });
  }

  // Scene radiance seen at a screen position, per group, bilinear in (u, v).
  void radiance_at(double u, double v, Rgba* out) const {
    for (int g = 0; g < groups_; ++g) out[g] = sample(radiance_[g], u, v, Filter::bilinear);
  }

  // Reflection seen in mirror layer li at pixel (x, y); false above the waterline.
  bool reflection(int li, int x, int y, Rgba* out) const {
    const std::optional<int> src = mirror_source_row(*s_.layers[li].material.mirror, y, h_);
    if (!src) return false;
    const int ry = *src;
    for (int g = 0; g < groups_; ++g) out[g] = Rgba::Zero();
    if (ry < 0 || ry >= h_ || layers_.visible(x, ry) == li) {
      out[0] = background(x, ry);
    } else {
      for (int g = 0; g < groups_; ++g) out[g] = radiance_[g](x, ry);
    }
    return true;
  }

  RefractSample refract(int li, int x, int y, double eta) const {
    RefractSample r;
    const Layer& layer = s_.layers[li];
    const Vec3 p = surface_point(li, x, y);
    const Vec3 incident = -view_dir(p);
    Vec3 n = layer.shape.normals.data(x, y);
    if (n.dot(incident) > 0.0) n = -n;
    const double cos_i = std::clamp(-n.dot(incident), 0.0, 1.0);
    const std::optional<Vec3> t = snell_refract(incident, n, eta);
    if (!t || t->z() > -1e-12) {
      r.total_internal = true;
      r.fresnel = 1.0;
      return r;
    }
    r.fresnel = schlick_fresnel(cos_i, eta);
    double gap;
    if (layer.shape.kind == ShapeKind::shape_map) {
      gap = layer.shape.thickness.data(x, y);
    } else {
      const int o = layers_.opaque(x, y);
      gap = p.z() - (o >= 0 ? layers_.surface[o](x, y) : layers_.shadow_height(x, y));
    }
    gap = std::max(0.0, gap);
    const double travel = gap / -t->z();
    r.offset = Vec2(t->x(), t->y()) * travel;
    return r;
  }

  const std::vector<ColorField>& radiance() const { return radiance_; }
  std::vector<ColorField>& direct_diffuse() { return direct_diffuse_; }
  std::vector<ColorField>& direct_specular() { return direct_specular_; }
  std::vector<ScalarField>& visibility() { return visibility_; }

 private:
  const MockScene& s_;
  int w_;
  int h_;
  int groups_;
  std::vector<Light> lights_;
  ScreenLayers layers_;
  HeightOccluder occluder_;
  std::vector<ColorField> radiance_;
  std::vector<ColorField> direct_diffuse_;
  std::vector<ColorField> direct_specular_;
  std::vector<ScalarField> visibility_;
};

// Runs fn on a conformed view of the scene, copying only when needed.
template <typename Fn>
auto with_conformed(const MockScene& scene, Fn&& fn) {
  if (channels_conformed(scene)) return fn(scene);
  MockScene copy = scene;
  conform_channels(copy);
  return fn(static_cast<const MockScene&>(copy));
}

IlluminationImage compute_w_conformed(const MockScene& scene, double t) {
  Stage stage(scene, t);
  stage.light_surfaces();
  const int w = stage.width();
  const int h = stage.height();
  const int groups = stage.groups();
  const ScreenLayers& L = stage.layers();

  IlluminationImage img;
  img.t = t;
  img.exposure = scene.resolved_exposure();
  img.diffuse = std::move(stage.direct_diffuse());
  img.specular = std::move(stage.direct_specular());
  img.visibility = std::move(stage.visibility());

  std::vector<int> tir_rows(h, 0);
  parallel_rows(h, [&](int y) {
    std::vector<Rgba> refl(groups), seen(groups);
    for (int x = 0; x < w; ++x) {
      const int v = L.visible(x, y);
      if (v < 0) continue;
      const Layer& layer = scene.layers[v];
      const Material& m = layer.material;
      const double matte = layer.shape.matte.data(x, y);
      const bool has_refl =
          m.mirror && scene.effects.reflections && stage.reflection(v, x, y, refl.data());
      if (!m.transmissive) {
        if (has_refl) {
          for (int g = 0; g < groups; ++g) img.specular[g](x, y) += matte * refl[g];
        }
        continue;
      }
      RefractSample r;
      if (scene.effects.refraction) r = stage.refract(v, x, y, m.eta);
      tir_rows[y] += r.total_internal;
      const double u = pixel_center(x, w) + r.offset.x();
      const double vv = pixel_center(y, h) + r.offset.y();
      stage.radiance_at(u, vv, seen.data());
      for (int g = 0; g < groups; ++g) {
        const Rgba behind = stage.radiance()[g](x, y);
        const Rgba reflected = has_refl ? refl[g] : Rgba::Zero();
        img.diffuse[g](x, y) = (1.0 - matte) * behind + matte * (1.0 - r.fresnel) * seen[g];
        img.specular[g](x, y) = matte * (img.specular[g](x, y) + r.fresnel * reflected);
      }
    }
  });
  for (int c : tir_rows) img.total_internal_reflections += c;

  if (scene.effects.bleed > 0.0) {
    for (int g = 0; g < groups; ++g) {
      Rgba sum = Rgba::Zero();
      std::size_t count = 0;
      for (std::size_t i = 0; i < L.opaque.size(); ++i) {
        if (L.opaque[i] < 0) continue;
        sum += stage.radiance()[g][i];
        ++count;
      }
      if (count == 0) continue;
      const Rgba ambient = scene.effects.bleed * sum / static_cast<double>(count);
      for (std::size_t i = 0; i < L.visible.size(); ++i) {
        const int v = L.visible[i];
        if (v >= 0 && !scene.layers[v].material.transmissive) img.diffuse[g][i] += ambient;
      }
    }
  }

  img.combined_w = ScalarField(w, h, 0.0);
  for (std::size_t i = 0; i < img.combined_w.size(); ++i) {
    Rgba sum = Rgba::Zero();
    for (int g = 0; g < groups; ++g) sum += img.diffuse[g][i] + img.specular[g][i];
    img.combined_w[i] = std::clamp(img.exposure * luminance(sum), 0.0, 1.0);
  }
  return img;
}

int layer_index(const MockScene& scene, const Layer& layer) {
  for (std::size_t i = 0; i < scene.layers.size(); ++i) {
    if (&scene.layers[i] == &layer) return static_cast<int>(i);
  }
  const int i = scene.find_layer(layer.id);
  if (i < 0) throw std::invalid_argument("layer '" + layer.id + "' is not part of the scene");
  return i;
}

}  // namespace

IlluminationImage compute_w(const MockScene& scene, double t) {
  return with_conformed(scene, [t](const MockScene& s) { return compute_w_conformed(s, t); });
}

ColorField mirror_reflect(const MockScene& scene, const Layer& mirror_layer, const Camera& camera,
                          double t) {
  if (!mirror_layer.material.mirror) {
    throw NotAMirror("layer '" + mirror_layer.id + "' has no mirror material");
  }
  const int li = layer_index(scene, mirror_layer);
  return with_conformed(scene, [&](const MockScene& conformed_scene) {
    MockScene viewed = conformed_scene;
    viewed.camera = camera;
    Stage stage(viewed, t);
    stage.light_surfaces();
    const int w = stage.width();
    const int h = stage.height();
    ColorField out(w, h, Rgba::Zero());
    const ScalarField& matte = viewed.layers[li].shape.matte.data;
    parallel_rows(h, [&](int y) {
      std::vector<Rgba> refl(stage.groups());
      for (int x = 0; x < w; ++x) {
        if (!(matte(x, y) > 0.0) || !stage.reflection(li, x, y, refl.data())) continue;
        Rgba sum = Rgba::Zero();
        for (const Rgba& r : refl) sum += r;
        out(x, y) = matte(x, y) * sum;
      }
    });
    return out;
  });
}

std::optional<int> mirror_source_row(const PlanarMirror& mirror, int y, int rows) {
  const double waterline = 1.0 - mirror.plane_height;
  const double v = pixel_center(y, rows);
  if (v < waterline) return std::nullopt;
  return static_cast<int>(std::floor((2.0 * waterline - v) * rows));
}

std::optional<Vec3> snell_refract(const Vec3& incident, const Vec3& normal, double eta) {
  const double ratio = 1.0 / eta;
  const double cos_i = -normal.dot(incident);
  const double k = 1.0 - ratio * ratio * (1.0 - cos_i * cos_i);
  if (k < 0.0) return std::nullopt;
  return Vec3(ratio * incident + (ratio * cos_i - std::sqrt(k)) * normal);
}

double schlick_fresnel(double cos_incident, double eta) {
  if (eta == 1.0) return 0.0;
  const double f0 = (1.0 - eta) / (1.0 + eta);
  const double r0 = f0 * f0;
  return r0 + (1.0 - r0) * std::pow(1.0 - std::clamp(cos_incident, 0.0, 1.0), 5.0);
}

Refraction refract_offset(const MockScene& scene, const Layer& layer, double eta,
                          const Camera& camera, double t) {
  if (!layer.material.transmissive) {
    throw std::invalid_argument("layer '" + layer.id + "' is not transmissive");
  }
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  const int li = layer_index(scene, layer);
  return with_conformed(scene, [&](const MockScene& conformed_scene) {
    MockScene viewed = conformed_scene;
    viewed.camera = camera;
    Stage stage(viewed, t);
    stage.light_surfaces();
    const int w = stage.width();
    const int h = stage.height();
    const int groups = stage.groups();
    Refraction out{ColorField(w, h, Rgba::Zero()), Vec2Field(w, h, Vec2::Zero()),
                   ScalarField(w, h, 0.0), MaskField(w, h, 0), 0};
    const ScalarField& matte = viewed.layers[li].shape.matte.data;
    const bool mirror = viewed.layers[li].material.mirror.has_value();
    std::vector<int> tir_rows(h, 0);
    parallel_rows(h, [&](int y) {
      std::vector<Rgba> seen(groups), refl(groups);
      for (int x = 0; x < w; ++x) {
        const double m = matte(x, y);
        if (!(m > 0.0)) continue;
        const RefractSample r = stage.refract(li, x, y, eta);
        out.offset(x, y) = r.offset;
        out.fresnel(x, y) = r.fresnel;
        out.total_internal(x, y) = r.total_internal;
        tir_rows[y] += r.total_internal;
        stage.radiance_at(pixel_center(x, w) + r.offset.x(), pixel_center(y, h) + r.offset.y(),
                          seen.data());
        const bool has_refl = mirror && stage.reflection(li, x, y, refl.data());
        Rgba c = Rgba::Zero();
        for (int g = 0; g < groups; ++g) {
          c += (1.0 - r.fresnel) * seen[g];
          if (has_refl) c += r.fresnel * refl[g];
        }
        out.color(x, y) = m * c;
      }
    });
    for (int c : tir_rows) out.total_internal_count += c;
    return out;
  });
}

}  // namespace mockshade
