#include "mockshade/pipeline.hpp"

#include "mockshade/parallel.hpp"
#include "mockshade/scene_io.hpp"

namespace mockshade {

ShadingSpec shading_spec(const MockScene& scene, const ScreenLayers& layers) {
  ShadingSpec spec;
  spec.basis = scene.shading.basis;
  spec.w_source = scene.shading.w_source;
  const int w = scene.width;
  const int h = scene.height;
  if (!scene.shading.textures.empty()) {
    for (const auto& t : scene.shading.textures) spec.textures.push_back(t.data);
  } else {
    const int n = spec.basis.n_weights();
    spec.textures.assign(n, ColorField(w, h, Rgba::Zero()));
    parallel_rows(h, [&](int y) {
      for (int x = 0; x < w; ++x) {
        const int li = layers.visible(x, y);
        if (li < 0) continue;
        const auto& own = scene.layers[li].control_textures;
        for (int i = 0; i < n && i < static_cast<int>(own.size()); ++i) {
          spec.textures[i](x, y) = own[i].data(x, y);
        }
      }
    });
  }
  if (const auto& ov = scene.shading.specular_overlay) {
    SpecularOverlay overlay{ov->basis, {}};
    for (const auto& t : ov->textures) overlay.textures.push_back(t.data);
    spec.specular_overlay = std::move(overlay);
  }
  return spec;
}

namespace {

Render render_conformed(const MockScene& scene, double t) {
  Render r;
  r.w = compute_w(scene, t);
  const ScreenLayers layers = resolve_layers(scene);
  r.styled = shade(r.w, shading_spec(scene, layers));
  const int w = scene.width;
  const int h = scene.height;
  r.coverage = ScalarField(w, h, 0.0);
  r.image = ColorField(w, h, Rgba::Zero());
  for (std::size_t i = 0; i < r.image.size(); ++i) {
    const int li = layers.visible[i];
    const double cov = li >= 0 ? std::min(1.0, scene.layers[li].shape.matte.data[i]) : 0.0;
    const Rgba bg = scene.background ? scene.background->data[i] : Rgba::Zero();
    r.coverage[i] = cov;
    r.image[i] = cov * r.styled[i] + (1.0 - cov) * bg;
  }
  return r;
}

}  // namespace

Render render_scene(const MockScene& scene, double t) {
  if (channels_conformed(scene)) return render_conformed(scene, t);
  MockScene copy = scene;
  conform_channels(copy);
  for (const Layer& l : copy.layers) {
    for (const auto& tex : l.control_textures) {
      if (tex.data.empty()) throw std::invalid_argument("layer '" + l.id + "' has an empty control texture");
    }
  }
  return render_conformed(copy, t);
}

ColorField exposed_illumination(const IlluminationImage& w) {
  ColorField out = w.total();
  for (Rgba& c : out.values()) c *= w.exposure;
  return out;
}

nlohmann::json w_sidecar(const IlluminationImage& w) {
  return {{"t", w.t},
          {"exposure", w.exposure},
          {"light_groups", w.groups()},
          {"width", w.combined_w.width()},
          {"height", w.combined_w.height()}};
}

}  // namespace mockshade
