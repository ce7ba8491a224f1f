#include <doctest.h>

#include <random>

#include "mockshade/baryshade.hpp"
#include "mockshade/pipeline.hpp"
#include "support.hpp"

using namespace mockshade;
using namespace mockshade::testing;

namespace {

// Bernstein weights straight from the binomial formula.
std::vector<double> bernstein(int d, double w) {
  std::vector<double> b(d + 1);
  for (int i = 0; i <= d; ++i) {
    double binom = 1.0;
    for (int k = 1; k <= i; ++k) binom = binom * (d - i + k) / k;
    b[i] = binom * std::pow(w, i) * std::pow(1.0 - w, d - i);
  }
  return b;
}

ScalarField random_w(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScalarField w(n, n);
  for (double& v : w.values()) v = u(rng);
  return w;
}

std::vector<ColorField> random_textures(int count, int n, std::mt19937& rng) {
  std::vector<ColorField> t;
  for (int i = 0; i < count; ++i) t.push_back(noise_texture(n, n, rng));
  return t;
}

bool in_hull(const ColorField& out, const std::vector<ColorField>& textures, double tol) {
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (int c = 0; c < 4; ++c) {
      double lo = textures[0][p][c];
      double hi = lo;
      for (const ColorField& t : textures) {
        lo = std::min(lo, t[p][c]);
        hi = std::max(hi, t[p][c]);
      }
      if (out[p][c] < lo - tol || out[p][c] > hi + tol) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("shade matches a per-pixel loop over explicit weights") {
  std::mt19937 rng(4);
  const int n = 24;
  for (int d : {1, 2, 3, 5}) {
    const WeightBasis basis = d == 1 ? WeightBasis::linear() : WeightBasis::bezier(d);
    const ScalarField w = random_w(n, rng);
    const auto textures = random_textures(d + 1, n, rng);
    const ColorField out = shade(w, basis, textures);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const auto b = bernstein(d, w(x, y));
        Rgba expect = Rgba::Zero();
        for (int i = 0; i <= d; ++i) expect += b[i] * textures[i](x, y);
        CHECK((out(x, y) - expect).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("endpoints reproduce the first and last texture") {
  std::mt19937 rng(9);
  const int n = 8;
  const auto textures = random_textures(4, n, rng);
  const ColorField lo = shade(ScalarField(n, n, 0.0), WeightBasis::bezier(3), textures);
  const ColorField hi = shade(ScalarField(n, n, 1.0), WeightBasis::bezier(3), textures);
  CHECK(lo == textures[0]);
  CHECK(hi == textures[3]);
  // Out-of-range w clamps.
  CHECK(shade(ScalarField(n, n, 1.7), WeightBasis::bezier(3), textures) == hi);
}

TEST_CASE("shaded colours stay in the per-pixel hull of the textures") {
  std::mt19937 rng(17);
  const int n = 32;
  for (const WeightBasis& basis :
       {WeightBasis::linear(), WeightBasis::bezier(4), WeightBasis::bspline0({0.0, 0.2, 0.7, 1.0})}) {
    const ScalarField w = random_w(n, rng);
    const auto textures = random_textures(basis.n_weights(), n, rng);
    CHECK(in_hull(shade(w, basis, textures), textures, 1e-12));
  }
}

TEST_CASE("degree-0 splines pick the texture of the knot interval") {
  const int n = 4;
  std::vector<ColorField> textures;
  for (int i = 0; i < 3; ++i) textures.emplace_back(n, n, Rgba(i, i, i, 1.0));
  const WeightBasis basis = WeightBasis::bspline0({0.0, 0.25, 0.5, 1.0});
  CHECK(shade(ScalarField(n, n, 0.1), basis, textures)(0, 0)[0] == 0.0);
  CHECK(shade(ScalarField(n, n, 0.25), basis, textures)(0, 0)[0] == 1.0);
  CHECK(shade(ScalarField(n, n, 1.0), basis, textures)(0, 0)[0] == 2.0);
}

TEST_CASE("texture count and size are checked") {
  std::mt19937 rng(2);
  const ScalarField w = random_w(8, rng);
  CHECK_THROWS_AS(shade(w, WeightBasis::linear(), random_textures(3, 8, rng)), std::invalid_argument);
  CHECK_THROWS_AS(shade(w, WeightBasis::linear(), random_textures(2, 9, rng)), ResolutionMismatch);
  CHECK_THROWS_AS(shade(w, WeightBasis::bspline0({0.0, 0.6, 0.5, 1.0}), random_textures(3, 8, rng)),
                  std::invalid_argument);
}

TEST_CASE("Lipschitz constants and the unbounded step basis") {
  CHECK(lipschitz_constant(WeightBasis::linear()) == 1.0);
  CHECK(lipschitz_constant(WeightBasis::bezier(6)) == 6.0);
  CHECK_THROWS_AS(lipschitz_constant(WeightBasis::uniform_bspline0(4)), NonLipschitzBasis);
  ShadingSpec spec{WeightBasis::uniform_bspline0(2), {}, {}, {}};
  std::mt19937 rng(1);
  spec.textures = random_textures(2, 8, rng);
  CHECK_THROWS_AS(robustness_bound(spec, random_w(8, rng), random_w(8, rng)), NonLipschitzBasis);
}

TEST_CASE("the Lipschitz constant is attained by a linear ramp of textures") {
  // With T_i = i/d the Bezier sum is w itself, so a change in w moves the
  // output by exactly |dw| = L * dw * max step.
  const int n = 4;
  const int d = 5;
  std::vector<ColorField> textures;
  for (int i = 0; i <= d; ++i) textures.emplace_back(n, n, Rgba::Constant(double(i) / d));
  ShadingSpec spec{WeightBasis::bezier(d), textures, {}, {}};
  const Robustness r = robustness_bound(spec, ScalarField(n, n, 0.3), ScalarField(n, n, 0.4));
  CHECK(r.observed == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(r.bound == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("blurring w moves the shading by no more than the bound") {
  std::mt19937 rng(33);
  const int n = 48;
  for (int d : {1, 2, 3, 4}) {
    ShadingSpec spec;
    spec.basis = d == 1 ? WeightBasis::linear() : WeightBasis::bezier(d);
    spec.textures = random_textures(d + 1, n, rng);
    const ScalarField w = random_w(n, rng);
    for (double sigma : {1.0, 2.0, 4.0, 8.0}) {
      const Robustness r = robustness_bound(spec, w, gaussian_blur(w, sigma));
      CHECK(r.observed <= r.bound + 1e-12);
      CHECK(r.bound <= r.coarse_bound + 1e-12);
      CHECK(r.observed > 0.0);
    }
  }
}

TEST_CASE("select_w reads combined or one group's plane") {
  MockScene s = random_scene(7, 32);
  Light extra = directional_light(1.0, 0.7, 0.5, 1);
  s.lights.push_back(extra);
  const IlluminationImage img = compute_w(s);
  CHECK(select_w(img, WSource{}) == img.combined_w);
  const ScalarField g1 = select_w(img, WSource{false, 1, false});
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(g1[i] == std::clamp(img.exposure * luminance(img.diffuse[1][i]), 0.0, 1.0));
  }
  CHECK_THROWS_AS(select_w(img, WSource{false, 5, false}), std::out_of_range);
}

TEST_CASE("the specular overlay adds its own shading") {
  std::mt19937 rng(5);
  const int n = 16;
  MockScene s = box_scene(n, 0.3, 0.6, 0.3, 0.6, 0.1, directional_light(0.5, 1.0));
  s.layers[1].material.specular_strength = 0.6;
  const IlluminationImage img = compute_w(s);
  ShadingSpec spec;
  spec.basis = WeightBasis::linear();
  spec.textures = random_textures(2, n, rng);
  const ColorField base = shade(img, spec);
  spec.specular_overlay = SpecularOverlay{WeightBasis::bezier(2), random_textures(3, n, rng)};
  const ColorField with = shade(img, spec);
  const ColorField overlay = shade(specular_w(img), spec.specular_overlay->basis, spec.specular_overlay->textures);
  for (std::size_t i = 0; i < with.size(); ++i) CHECK(with[i] == base[i] + overlay[i]);
}
