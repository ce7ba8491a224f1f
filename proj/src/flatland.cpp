#include "mockshade/flatland.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mockshade {

double FlatScene::ground_at(double x) const {
  if (ground.empty()) return 0.0;
  if (x <= ground.front().x()) return ground.front().y();
  if (x >= ground.back().x()) return ground.back().y();
  for (std::size_t i = 1; i < ground.size(); ++i) {
    if (x <= ground[i].x()) {
      const Vec2& a = ground[i - 1];
      const Vec2& b = ground[i];
      const double t = b.x() > a.x() ? (x - a.x()) / (b.x() - a.x()) : 0.0;
      return a.y() + t * (b.y() - a.y());
    }
  }
  return ground.back().y();
}

double FlatScene::surface_at(double x) const {
  double z = ground_at(x);
  for (const FlatBox& b : occluders) {
    if (x >= b.x0 && x <= b.x1) z = std::max(z, b.height);
  }
  return z;
}

namespace {

// Ray p + t d for t in (t_min, t_max); true if it passes through the open box.
bool hits_box(const Vec2& p, const Vec2& d, double t_min, double t_max, const FlatBox& box) {
  double lo = t_min;
  double hi = t_max;
  const double mins[2] = {box.x0, 0.0};
  const double maxs[2] = {box.x1, box.height};
  for (int a = 0; a < 2; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (p[a] <= mins[a] || p[a] >= maxs[a]) return false;
      continue;
    }
    double t0 = (mins[a] - p[a]) / d[a];
    double t1 = (maxs[a] - p[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
  }
  return hi - lo > 1e-12;
}

// True if the ray dips below the ground polyline somewhere in (t_min, t_max).
bool hits_ground(const std::vector<Vec2>& ground, const Vec2& p, const Vec2& d, double t_min,
                 double t_max) {
  for (std::size_t i = 1; i < ground.size(); ++i) {
    const Vec2& a = ground[i - 1];
    const Vec2& b = ground[i];
    const Vec2 e = b - a;
    const double denom = d.x() * e.y() - d.y() * e.x();
    if (std::abs(denom) < 1e-15) continue;
    const Vec2 ap = a - p;
    const double t = (ap.x() * e.y() - ap.y() * e.x()) / denom;
    const double s = (ap.x() * d.y() - ap.y() * d.x()) / denom;
    if (t > t_min && t < t_max && s >= 0.0 && s <= 1.0) {
      // Crossing from above to below the segment.
      const double cross = e.x() * d.y() - e.y() * d.x();
      if (cross < 0.0) return true;
    }
  }
  return false;
}

Vec2 surface_normal(const FlatScene& scene, double x) {
  for (const FlatBox& b : scene.occluders) {
    if (x >= b.x0 && x <= b.x1 && b.height >= scene.ground_at(x)) return Vec2(0.0, 1.0);
  }
  for (std::size_t i = 1; i < scene.ground.size(); ++i) {
    if (x <= scene.ground[i].x()) {
      const Vec2 e = scene.ground[i] - scene.ground[i - 1];
      return Vec2(-e.y(), e.x()).normalized();
    }
  }
  return Vec2(0.0, 1.0);
}

}  // namespace

FlatImage flatland_render(const FlatScene& scene, int image_width) {
  FlatImage img;
  img.radiance.resize(image_width);
  img.shadow_mask.resize(image_width);
  img.surface.resize(image_width);
  for (int i = 0; i < image_width; ++i) {
    const double x = (i + 0.5) / image_width * scene.length;
    const double z = scene.surface_at(x);
    const Vec2 p(x, z);
    Vec2 d;
    double t_max;
    double falloff = 1.0;
    if (const auto* dl = std::get_if<FlatDirectional>(&scene.light)) {
      d = Vec2((dl->from_left ? -1.0 : 1.0) * std::cos(dl->elevation), std::sin(dl->elevation));
      t_max = std::numeric_limits<double>::infinity();
    } else {
      const auto& pl = std::get<FlatPoint>(scene.light);
      const Vec2 to = Vec2(pl.x, pl.z) - p;
      const double dist = to.norm();
      d = to / dist;
      t_max = dist;
      falloff = 1.0 / (dist * dist);
    }
    const double t_min = 1e-9 * (1.0 + std::abs(z));
    bool blocked = false;
    for (const FlatBox& b : scene.occluders) {
      if (hits_box(p, d, t_min, t_max, b)) {
        blocked = true;
        break;
      }
    }
    if (!blocked) blocked = hits_ground(scene.ground, p, d, t_min, t_max);
    const double ndotl = std::max(0.0, surface_normal(scene, x).dot(d));
    img.surface[i] = z;
    img.shadow_mask[i] = blocked;
    img.radiance[i] = blocked ? 0.0 : ndotl * falloff;
  }
  return img;
}

double mask_iou(const std::vector<bool>& a, const std::vector<bool>& b) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    inter += a[i] && b[i];
    uni += a[i] || b[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace mockshade
