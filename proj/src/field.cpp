#include "mockshade/field.hpp"

#include <cmath>

namespace mockshade {

std::vector<double> gaussian_kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int o = -r; o <= r; ++o) {
    const double v = std::exp(-(o * o) / (2.0 * sigma * sigma));
    k[o + r] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

Vec2Field finite_diff_gradient(const ScalarField& height) {
  const int w = height.width();
  const int h = height.height();
  if (w < 2 || h < 2) {
    throw std::invalid_argument("finite_diff_gradient: field must be at least 2x2");
  }
  Vec2Field grad(w, h, Vec2::Zero(), height.wrap());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double du;
      if (x == 0) {
        du = (height(1, y) - height(0, y)) * w;
      } else if (x == w - 1) {
        du = (height(w - 1, y) - height(w - 2, y)) * w;
      } else {
        du = (height(x + 1, y) - height(x - 1, y)) * 0.5 * w;
      }
      double dv;
      if (y == 0) {
        dv = (height(x, 1) - height(x, 0)) * h;
      } else if (y == h - 1) {
        dv = (height(x, h - 1) - height(x, h - 2)) * h;
      } else {
        dv = (height(x, y + 1) - height(x, y - 1)) * 0.5 * h;
      }
      grad(x, y) = Vec2(du, dv);
    }
  }
  return grad;
}

Vec3Field normals_from_height(const ScalarField& height) {
  const Vec2Field g = finite_diff_gradient(height);
  return map(g, [](const Vec2& s) { return Vec3(Vec3(-s.x(), -s.y(), 1.0).normalized()); });
}

}  // namespace mockshade
