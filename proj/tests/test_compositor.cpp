#include <doctest.h>

#include <random>

#include "mockshade/compositor.hpp"
#include "mockshade/image_io.hpp"
#include "support.hpp"

using namespace mockshade;
using namespace mockshade::testing;

namespace {

double max_diff(const ColorField& a, const ColorField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return m;
}

// Random impact with premultiplied object colour and a partial refraction.
ImpactSet random_impact(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImpactSet im = ImpactSet::empty(n, n);
  im.refraction = ColorField(n, n, Rgba::Zero());
  for (std::size_t i = 0; i < im.object_matte.size(); ++i) {
    const double m = u(rng) < 0.5 ? 0.0 : u(rng);
    im.object_matte[i] = m;
    im.object_color[i] = Rgba(m * u(rng), m * u(rng), m * u(rng), m);
    im.shadow[i] = 0.5 * u(rng);
    im.reflection[i] = Rgba(0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng), 0.0);
    const double a = u(rng) < 0.7 ? 0.0 : 0.5 * u(rng);
    (*im.refraction)[i] = Rgba(a * u(rng), a * u(rng), a * u(rng), a);
  }
  return im;
}

ColorField random_background(int n, std::mt19937& rng) { return noise_texture(n, n, rng); }

double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("empty impacts leave the background bit-exact") {
  std::mt19937 rng(1);
  const ColorField bg = random_background(32, rng);
  CHECK(composite({bg, {}, 1.0, Vec3::Zero()}) == bg);
  CHECK(composite({bg, {ImpactSet::empty(32, 32), ImpactSet::empty(32, 32)}, 0.7, Vec3(0.1, 0.2, 0.3)}) == bg);
}

TEST_CASE("composite follows the per-pixel recipe") {
  ColorField bg(1, 1, Rgba(0.5, 0.4, 0.3, 1.0));
  ImpactSet im = ImpactSet::empty(1, 1);
  im.shadow(0, 0) = 0.5;
  im.reflection(0, 0) = Rgba(0.1, 0.1, 0.1, 0.0);
  im.object_matte(0, 0) = 0.25;
  im.object_color(0, 0) = Rgba(0.25, 0.0, 0.0, 0.25);
  const Vec3 tint(0.2, 0.0, 0.0);
  const Rgba out = composite({bg, {im}, 0.8, tint})(0, 0);
  Rgba expect = bg(0, 0);
  for (int c = 0; c < 3; ++c) expect[c] *= 1.0 - 0.8 * 0.5 * (1.0 - tint[c]);
  expect.head<3>() += Vec3::Constant(0.1);
  expect = Rgba(0.25, 0.0, 0.0, 0.25) + 0.75 * expect;
  CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("shadows never brighten") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 16;
  for (int trial = 0; trial < 100; ++trial) {
    const ColorField bg = random_background(n, rng);
    ImpactSet im = ImpactSet::empty(n, n);
    for (double& s : im.shadow.values()) s = u(rng);
    const Vec3 tint(u(rng), u(rng), u(rng));
    const ColorField out = composite({bg, {im, im}, u(rng), tint});
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (int c = 0; c < 3; ++c) CHECK(out[i][c] <= bg[i][c]);
    }
  }
}

TEST_CASE("merging is associative") {
  std::mt19937 rng(21);
  const int n = 16;
  for (int trial = 0; trial < 10; ++trial) {
    const ImpactSet a = random_impact(n, rng);
    const ImpactSet b = random_impact(n, rng);
    const ImpactSet c = random_impact(n, rng);
    const ColorField bg = random_background(n, rng);
    const ColorField left = composite({bg, {merge_impacts(merge_impacts(a, b), c)}, 1.0, Vec3::Zero()});
    const ColorField right = composite({bg, {merge_impacts(a, merge_impacts(b, c))}, 1.0, Vec3::Zero()});
    CHECK(max_diff(left, right) < 1e-6);
  }
}

TEST_CASE("a merge of disjoint impacts equals applying them in order") {
  std::mt19937 rng(5);
  const int n = 16;
  ImpactSet lower = random_impact(n, rng);
  ImpactSet upper = random_impact(n, rng);
  lower.refraction.reset();
  upper.refraction.reset();
  // Lower on the left half, upper on the right.
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      ImpactSet& off = x < n / 2 ? upper : lower;
      off.object_matte(x, y) = 0.0;
      off.object_color(x, y) = Rgba::Zero();
      off.shadow(x, y) = 0.0;
      off.reflection(x, y) = Rgba::Zero();
    }
  }
  const ColorField bg = random_background(n, rng);
  const ColorField sequential = composite({bg, {lower, upper}, 1.0, Vec3::Zero()});
  const ColorField merged = composite({bg, {merge_impacts(lower, upper)}, 1.0, Vec3::Zero()});
  CHECK(max_diff(sequential, merged) < 1e-12);
}

TEST_CASE("mismatched planes are rejected") {
  CompositeRecipe r{ColorField(8, 8, Rgba::Zero()), {ImpactSet::empty(8, 7)}, 1.0, Vec3::Zero()};
  CHECK_THROWS_AS(composite(r), ResolutionMismatch);
  CHECK_THROWS_AS(merge_impacts(ImpactSet::empty(8, 8), ImpactSet::empty(4, 4)), ResolutionMismatch);
}

TEST_CASE("impacts written to disk load back as a recipe") {
  std::mt19937 rng(3);
  const int n = 12;
  const auto dir = temp_dir("recipe");
  const ImpactSet im = random_impact(n, rng);
  const ColorField bg = random_background(n, rng);
  save_pfm(dir / "bg.pfm", bg);
  nlohmann::json doc = {{"background", "bg.pfm"},
                        {"impacts", {save_impacts(im, dir / "a")}},
                        {"shadow_strength", 0.5},
                        {"shadow_tint", {0.25, 0.5, 0.0}}};
  write_file(dir / "recipe.json", doc.dump());
  const CompositeRecipe r = load_recipe(dir / "recipe.json");
  // Planes are stored as 32-bit floats.
  CHECK(max_diff(r.background, bg) < 1e-7);
  REQUIRE(r.impacts.size() == 1);
  CHECK(max_diff(r.impacts[0].object_color, im.object_color) < 1e-7);
  CHECK(max_diff(r.impacts[0].object_matte, im.object_matte) < 1e-7);
  CHECK(max_diff(r.impacts[0].shadow, im.shadow) < 1e-7);
  CHECK(max_diff(*r.impacts[0].refraction, *im.refraction) < 1e-7);
  CHECK(r.shadow_strength == 0.5);
  CHECK(r.shadow_tint == Vec3(0.25, 0.5, 0.0));
  CHECK(max_diff(composite(r), composite({bg, {im}, 0.5, Vec3(0.25, 0.5, 0.0)})) < 1e-6);

  CHECK_THROWS_AS(parse_recipe({{"background", "bg.pfm"}, {"extra", 1}}, dir), std::invalid_argument);
  CHECK_THROWS_AS(load_recipe(dir / "missing.json"), IoError);
}

TEST_CASE("virtual objects darken the proxy scene and appear over it") {
  const int n = 64;
  MockScene s = box_scene(n, 0.4, 0.5, 0.4, 0.6, 0.1, directional_light(M_PI, M_PI / 4));
  const ImpactSet im = render_impacts(s, {"box"});
  double shadow_sum = 0.0;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double u = pixel_center(x, n);
      const double v = pixel_center(y, n);
      CHECK(im.shadow(x, y) >= 0.0);
      CHECK(im.shadow(x, y) <= 1.0);
      shadow_sum += im.shadow(x, y);
      const bool on_box = u >= 0.4 && u <= 0.5 && v >= 0.4 && v <= 0.6;
      CHECK(im.object_matte(x, y) == (on_box ? 1.0 : 0.0));
      // The cast shadow falls right of the box, within its v extent.
      if (u > 0.51 && u < 0.59 && v > 0.42 && v < 0.58) CHECK(im.shadow(x, y) == 1.0);
      if (u < 0.39) CHECK(im.shadow(x, y) == 0.0);
    }
  }
  CHECK(shadow_sum > 0.0);
  CHECK(render_impacts(s, {}).shadow == ImpactSet::empty(n, n).shadow);
  CHECK_THROWS_AS(render_impacts(s, {"ghost"}), UnknownLayer);
}
