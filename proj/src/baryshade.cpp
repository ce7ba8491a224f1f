#include "mockshade/baryshade.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mockshade/parallel.hpp"

namespace mockshade {

namespace {

ScalarField exposed(const IlluminationImage& img, const ColorField& plane) {
  ScalarField out(plane.width(), plane.height(), 0.0);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    out[i] = std::clamp(img.exposure * luminance(plane[i]), 0.0, 1.0);
  }
  return out;
}

void check_textures(const ScalarField& w, const WeightBasis& basis,
                    const std::vector<ColorField>& textures) {
  if (const char* why = basis.invalid_reason()) throw std::invalid_argument(why);
  if (static_cast<int>(textures.size()) != basis.n_weights()) {
    throw std::invalid_argument("expected " + std::to_string(basis.n_weights()) +
                                " textures, got " + std::to_string(textures.size()));
  }
  for (const ColorField& t : textures) {
    if (t.width() != w.width() || t.height() != w.height()) {
      throw ResolutionMismatch("texture is " + std::to_string(t.width()) + "x" +
                               std::to_string(t.height()) + " but w is " +
                               std::to_string(w.width()) + "x" + std::to_string(w.height()));
    }
  }
}

}  // namespace

ScalarField select_w(const IlluminationImage& w_image, const WSource& source) {
  if (source.combined) return w_image.combined_w;
  if (source.group < 0 || source.group >= w_image.groups()) {
    throw std::out_of_range("no light group " + std::to_string(source.group));
  }
  const auto& planes = source.specular ? w_image.specular : w_image.diffuse;
  return exposed(w_image, planes[source.group]);
}

ScalarField specular_w(const IlluminationImage& w_image) {
  ColorField sum(w_image.combined_w.width(), w_image.combined_w.height(), Rgba::Zero());
  for (const ColorField& s : w_image.specular) {
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += s[i];
  }
  return exposed(w_image, sum);
}

ColorField shade(const ScalarField& w, const WeightBasis& basis,
                 const std::vector<ColorField>& textures) {
  check_textures(w, basis, textures);
  const int n = basis.n_weights();
  ColorField out(w.width(), w.height(), Rgba::Zero());
  parallel_rows(w.height(), [&](int y) {
    std::vector<double> b(n);
    for (int x = 0; x < w.width(); ++x) {
      eval_basis_into(basis, w(x, y), b.data());
      Rgba acc = Rgba::Zero();
      for (int i = 0; i < n; ++i) acc += b[i] * textures[i](x, y);
      out(x, y) = acc;
    }
  });
  return out;
}

ColorField shade(const IlluminationImage& w_image, const ShadingSpec& spec) {
  ColorField out = shade(select_w(w_image, spec.w_source), spec.basis, spec.textures);
  if (spec.specular_overlay) {
    const ColorField overlay =
        shade(specular_w(w_image), spec.specular_overlay->basis, spec.specular_overlay->textures);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += overlay[i];
  }
  return out;
}

double lipschitz_constant(const WeightBasis& basis) {
  switch (basis.kind) {
    case WeightBasis::Kind::linear: return 1.0;
    case WeightBasis::Kind::bezier: return basis.degree;
    case WeightBasis::Kind::bspline0: break;
  }
  throw NonLipschitzBasis("degree-0 B-spline weights are piecewise constant in w");
}

Robustness robustness_bound(const ShadingSpec& spec, const ScalarField& w1, const ScalarField& w2) {
  const double lip = lipschitz_constant(spec.basis);
  if (!w1.same_shape(w2)) throw ResolutionMismatch("w1 and w2 differ in size");
  const ColorField a = shade(w1, spec.basis, spec.textures);
  const ColorField b = shade(w2, spec.basis, spec.textures);

  Robustness r;
  double dw = 0.0;
  for (std::size_t i = 0; i < w1.size(); ++i) {
    dw = std::max(dw, std::abs(std::clamp(w1[i], 0.0, 1.0) - std::clamp(w2[i], 0.0, 1.0)));
    r.observed = std::max(r.observed, (a[i] - b[i]).cwiseAbs().maxCoeff());
  }
  double step = 0.0;
  double peak = 0.0;
  for (std::size_t t = 0; t < spec.textures.size(); ++t) {
    for (std::size_t i = 0; i < w1.size(); ++i) {
      peak = std::max(peak, spec.textures[t][i].cwiseAbs().maxCoeff());
      if (t + 1 < spec.textures.size()) {
        step = std::max(step, (spec.textures[t + 1][i] - spec.textures[t][i]).cwiseAbs().maxCoeff());
      }
    }
  }
  r.bound = lip * dw * step;
  r.coarse_bound = lip * dw * peak * static_cast<double>(spec.textures.size());
  return r;
}

}  // namespace mockshade
