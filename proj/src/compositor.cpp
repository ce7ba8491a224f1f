#include "mockshade/compositor.hpp"

#include <algorithm>
#include <fstream>

#include "mockshade/illumination.hpp"
#include "mockshade/image_io.hpp"
#include "mockshade/parallel.hpp"
#include "mockshade/pipeline.hpp"
#include "mockshade/scene_io.hpp"

namespace mockshade {

namespace fs = std::filesystem;
using nlohmann::json;

ImpactSet ImpactSet::empty(int width, int height) {
  return {ColorField(width, height, Rgba::Zero()), ScalarField(width, height, 0.0),
          ScalarField(width, height, 0.0), ColorField(width, height, Rgba::Zero()), std::nullopt};
}

namespace {

template <typename T>
void require_shape(const Field2D<T>& f, int w, int h, const char* what) {
  if (f.width() != w || f.height() != h) {
    throw ResolutionMismatch(std::string(what) + " is " + std::to_string(f.width()) + "x" +
                             std::to_string(f.height()) + ", expected " + std::to_string(w) + "x" +
                             std::to_string(h));
  }
}

}  // namespace

ColorField composite(const CompositeRecipe& recipe) {
  const int w = recipe.background.width();
  const int h = recipe.background.height();
  for (const ImpactSet& im : recipe.impacts) {
    require_shape(im.object_color, w, h, "object_color");
    require_shape(im.object_matte, w, h, "object_matte");
    require_shape(im.shadow, w, h, "shadow");
    require_shape(im.reflection, w, h, "reflection");
    if (im.refraction) require_shape(*im.refraction, w, h, "refraction");
  }
  ColorField out = recipe.background;
  const double k = recipe.shadow_strength;
  const Vec3 darkening = Vec3::Ones() - recipe.shadow_tint;
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      Rgba bg = out(x, y);
      for (const ImpactSet& im : recipe.impacts) {
        const double s = im.shadow(x, y);
        if (s != 0.0 && k != 0.0) {
          bg.head<3>() = bg.head<3>().cwiseProduct(Vec3::Ones() - k * s * darkening);
        }
        bg.head<3>() += im.reflection(x, y).head<3>();
        if (im.refraction) {
          const Rgba& r = (*im.refraction)(x, y);
          bg = r + bg * (1.0 - r[3]);
        }
        bg = im.object_color(x, y) + bg * (1.0 - im.object_matte(x, y));
      }
      out(x, y) = bg;
    }
  });
  return out;
}

ImpactSet merge_impacts(const ImpactSet& lower, const ImpactSet& upper) {
  const int w = lower.object_matte.width();
  const int h = lower.object_matte.height();
  require_shape(upper.object_matte, w, h, "object_matte");
  ImpactSet out = ImpactSet::empty(w, h);
  const bool refr = lower.refraction || upper.refraction;
  if (refr) out.refraction = ColorField(w, h, Rgba::Zero());
  for (std::size_t i = 0; i < out.object_matte.size(); ++i) {
    const double mu = upper.object_matte[i];
    out.object_color[i] = upper.object_color[i] + lower.object_color[i] * (1.0 - mu);
    out.object_matte[i] = mu + lower.object_matte[i] * (1.0 - mu);
    out.shadow[i] = lower.shadow[i] + upper.shadow[i];
    out.reflection[i] = lower.reflection[i] + upper.reflection[i];
    if (refr) {
      const Rgba lo = lower.refraction ? (*lower.refraction)[i] : Rgba::Zero();
      const Rgba up = upper.refraction ? (*upper.refraction)[i] : Rgba::Zero();
      (*out.refraction)[i] = up + lo * (1.0 - up[3]);
    }
  }
  return out;
}

ImpactSet render_impacts(const MockScene& scene, const std::set<std::string>& virtual_ids,
                         double t) {
  for (const std::string& id : virtual_ids) {
    if (scene.find_layer(id) < 0) throw UnknownLayer("no layer named '" + id + "'");
  }
  MockScene full = scene;
  conform_channels(full);
  const int w = full.width;
  const int h = full.height;
  ImpactSet out = ImpactSet::empty(w, h);
  if (virtual_ids.empty()) return out;

  MockScene proxies = full;
  MockScene virtuals = full;
  proxies.layers.clear();
  virtuals.layers.clear();
  std::vector<char> is_virtual(full.layers.size(), 0);
  for (std::size_t i = 0; i < full.layers.size(); ++i) {
    is_virtual[i] = virtual_ids.count(full.layers[i].id) > 0;
    (is_virtual[i] ? virtuals : proxies).layers.push_back(full.layers[i]);
  }

  const ScreenLayers layers = resolve_layers(full);
  const IlluminationImage w_all = compute_w(full, t);

  if (!proxies.layers.empty()) {
    const IlluminationImage w_proxy = compute_w(proxies, t);
    const std::vector<Light> lights = full.lights_at(t);
    std::vector<double> weight(lights.size(), 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < lights.size(); ++k) {
      weight[k] = luminance(lights[k].intensity);
      total += weight[k];
    }
    for (double& x : weight) x = total > 0.0 ? x / total : 1.0 / lights.size();
    for (std::size_t i = 0; i < out.shadow.size(); ++i) {
      const int v = layers.visible[i];
      if (v < 0 || is_virtual[v]) continue;
      double s = 0.0;
      for (std::size_t k = 0; k < lights.size(); ++k) {
        s += weight[k] * std::max(0.0, w_proxy.visibility[k][i] - w_all.visibility[k][i]);
      }
      out.shadow[i] = std::min(1.0, s);
    }

    for (std::size_t li = 0; li < full.layers.size(); ++li) {
      const Layer& m = full.layers[li];
      if (is_virtual[li] || !m.material.mirror) continue;
      const ColorField refl = mirror_reflect(full, m, full.camera, t);
      for (int y = 0; y < h; ++y) {
        const std::optional<int> src = mirror_source_row(*m.material.mirror, y, h);
        if (!src || *src < 0 || *src >= h) continue;
        for (int x = 0; x < w; ++x) {
          const int sv = layers.visible(x, *src);
          if (sv < 0 || !is_virtual[sv] || layers.visible(x, y) != static_cast<int>(li)) continue;
          const double alpha = m.shape.matte.data(x, y) * full.layers[sv].shape.matte.data(x, *src);
          out.reflection(x, y) = refl(x, y);
          out.reflection(x, y)[3] = alpha;
        }
      }
    }
  }

  const Render object = render_scene(virtuals, t);
  for (std::size_t i = 0; i < out.object_matte.size(); ++i) {
    const int v = layers.visible[i];
    if (v < 0 || !is_virtual[v]) continue;
    const double m = object.coverage[i];
    out.object_matte[i] = m;
    out.object_color[i] = m * object.styled[i];
  }
  return out;
}

namespace {

ColorField load_color_plane(const fs::path& p) {
  return p.extension() == ".pfm" ? load_pfm_color(p) : load_png_color(p);
}

ScalarField load_scalar_plane(const fs::path& p) {
  return p.extension() == ".pfm" ? load_pfm_scalar(p) : load_png_scalar(p);
}

}  // namespace

CompositeRecipe parse_recipe(const json& doc, const fs::path& base_dir) {
  static const std::set<std::string> top = {"background", "impacts", "shadow_strength",
                                            "shadow_tint"};
  static const std::set<std::string> planes = {"object_color", "object_matte", "shadow",
                                               "reflection", "refraction", "refraction_matte"};
  if (!doc.is_object()) throw std::invalid_argument("recipe must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!top.count(key)) throw std::invalid_argument("unknown recipe key '" + key + "'");
  }
  if (!doc.contains("background")) throw std::invalid_argument("recipe needs a background");
  CompositeRecipe r;
  r.background = load_color_plane(base_dir / doc.at("background").get<std::string>());
  const int w = r.background.width();
  const int h = r.background.height();
  r.shadow_strength = doc.value("shadow_strength", 1.0);
  if (doc.contains("shadow_tint")) {
    const auto tint = doc.at("shadow_tint").get<std::vector<double>>();
    if (tint.size() != 3) throw std::invalid_argument("shadow_tint needs 3 components");
    r.shadow_tint = Vec3(tint[0], tint[1], tint[2]);
  }
  for (const json& j : doc.value("impacts", json::array())) {
    for (const auto& [key, value] : j.items()) {
      if (!planes.count(key)) throw std::invalid_argument("unknown impact plane '" + key + "'");
    }
    ImpactSet im = ImpactSet::empty(w, h);
    auto path = [&](const char* key) { return base_dir / j.at(key).get<std::string>(); };
    if (j.contains("object_color")) im.object_color = load_color_plane(path("object_color"));
    if (j.contains("object_matte")) im.object_matte = load_scalar_plane(path("object_matte"));
    if (j.contains("shadow")) im.shadow = load_scalar_plane(path("shadow"));
    if (j.contains("reflection")) im.reflection = load_color_plane(path("reflection"));
    if (j.contains("refraction")) im.refraction = load_color_plane(path("refraction"));
    if (j.contains("refraction_matte")) {
      if (!im.refraction) throw std::invalid_argument("refraction_matte without refraction");
      const ScalarField a = load_scalar_plane(path("refraction_matte"));
      require_shape(a, w, h, "refraction_matte");
      for (std::size_t i = 0; i < a.size(); ++i) (*im.refraction)[i][3] = a[i];
    }
    // Colour planes in PFM carry no alpha; the object's is its matte.
    require_shape(im.object_matte, w, h, "object_matte");
    require_shape(im.object_color, w, h, "object_color");
    for (std::size_t i = 0; i < im.object_matte.size(); ++i) im.object_color[i][3] = im.object_matte[i];
    r.impacts.push_back(std::move(im));
  }
  return r;
}

CompositeRecipe load_recipe(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open recipe " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("invalid recipe JSON: ") + e.what());
  }
  return parse_recipe(doc, path.parent_path());
}

json save_impacts(const ImpactSet& impacts, const fs::path& prefix) {
  const std::string stem = prefix.filename().string();
  auto at = [&](const std::string& suffix) {
    fs::path p = prefix;
    p.replace_filename(stem + suffix);
    return p;
  };
  save_pfm(at("_object_color.pfm"), impacts.object_color);
  save_pfm(at("_object_matte.pfm"), impacts.object_matte);
  save_pfm(at("_shadow.pfm"), impacts.shadow);
  save_pfm(at("_reflection.pfm"), impacts.reflection);
  json j = {{"object_color", stem + "_object_color.pfm"},
            {"object_matte", stem + "_object_matte.pfm"},
            {"shadow", stem + "_shadow.pfm"},
            {"reflection", stem + "_reflection.pfm"}};
  if (impacts.refraction) {
    save_pfm(at("_refraction.pfm"), *impacts.refraction);
    ScalarField alpha(impacts.refraction->width(), impacts.refraction->height());
    for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] = (*impacts.refraction)[i][3];
    save_pfm(at("_refraction_matte.pfm"), alpha);
    j["refraction"] = stem + "_refraction.pfm";
    j["refraction_matte"] = stem + "_refraction_matte.pfm";
  }
  return j;
}

}  // namespace mockshade
