#include "mockshade/shadow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mockshade/parallel.hpp"

namespace mockshade {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

double hash_uniform(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  std::uint64_t h = splitmix(a);
  h = splitmix(h ^ b);
  h = splitmix(h ^ c);
  h = splitmix(h ^ d);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Vec3 area_light_sample(const Light& light, int sample, int samples, std::uint64_t pixel,
                       std::uint64_t light_id) {
  const int grid = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(samples)))));
  const int cells = grid * grid;
  double su;
  double sv;
  if (sample < cells) {
    su = (sample % grid + hash_uniform(pixel, light_id, sample, 0)) / grid;
    sv = (sample / grid + hash_uniform(pixel, light_id, sample, 1)) / grid;
  } else {
    su = hash_uniform(pixel, light_id, sample, 0);
    sv = hash_uniform(pixel, light_id, sample, 1);
  }
  return light.position + Vec3((su - 0.5) * light.extent.x(), (sv - 0.5) * light.extent.y(), 0.0);
}

HeightOccluder::HeightOccluder(const ScalarField& height) : height_(height) {
  max_height_ = -std::numeric_limits<double>::infinity();
  for (double h : height_.values()) max_height_ = std::max(max_height_, h);
}

double HeightOccluder::at(int major, double minor, bool major_is_x) const {
  const int n_minor = major_is_x ? height_.height() : height_.width();
  const double f = std::floor(minor);
  const int i0 = std::clamp(static_cast<int>(f), 0, n_minor - 1);
  const int i1 = std::min(i0 + 1, n_minor - 1);
  const double t = minor - f;
  if (major_is_x) return (1.0 - t) * height_(major, i0) + t * height_(major, i1);
  return (1.0 - t) * height_(i0, major) + t * height_(i1, major);
}

// dir_pixels: (dx, dy) in pixel units and dz in height units, scaled so the
// dominant horizontal component is +-1.
bool HeightOccluder::march(int x, int y, double z, const Vec3& dir, double max_steps) const {
  const int w = height_.width();
  const int h = height_.height();
  const bool major_is_x = std::abs(dir.x()) >= std::abs(dir.y());
  const int step = (major_is_x ? dir.x() : dir.y()) > 0 ? 1 : -1;
  const double minor_rate = major_is_x ? dir.y() : dir.x();
  const int major0 = major_is_x ? x : y;
  const int minor0 = major_is_x ? y : x;
  const int n_major = major_is_x ? w : h;
  const int n_minor = major_is_x ? h : w;
  const double bias = 1e-9 * (1.0 + std::abs(z));
  for (int k = 1; k <= max_steps; ++k) {
    const int major = major0 + k * step;
    if (major < 0 || major >= n_major) return false;
    const double minor = minor0 + k * minor_rate;
    // The image spans half a pixel beyond the outer centres; edge samples clamp.
    if (minor < -0.5 || minor > n_minor - 0.5) return false;
    const double ray_z = z + k * dir.z();
    if (dir.z() >= 0.0 && ray_z > max_height_) return false;
    if (at(major, minor, major_is_x) > ray_z + bias) return true;
  }
  return false;
}

bool HeightOccluder::occluded_directional(int x, int y, double z, const Vec3& to_light) const {
  if (to_light.z() <= 0.0) return true;
  const double dx = to_light.x() * height_.width();
  const double dy = to_light.y() * height_.height();
  const double major = std::max(std::abs(dx), std::abs(dy));
  if (major < 1e-12) return false;
  const Vec3 dir(dx / major, dy / major, to_light.z() / major);
  return march(x, y, z, dir, std::numeric_limits<double>::infinity());
}

bool HeightOccluder::occluded_point(int x, int y, double z, const Vec3& target) const {
  const double px = pixel_center(x, height_.width());
  const double py = pixel_center(y, height_.height());
  const double dx = (target.x() - px) * height_.width();
  const double dy = (target.y() - py) * height_.height();
  const double dz = target.z() - z;
  const double major = std::max(std::abs(dx), std::abs(dy));
  if (major < 1e-12) return dz < 0.0;
  const Vec3 dir(dx / major, dy / major, dz / major);
  // Stop before the step that would pass the light.
  return march(x, y, z, dir, std::floor(major));
}

ScalarField cast_shadow(const ScalarField& height, const Light& light, int samples) {
  const HeightOccluder occ(height);
  const int w = height.width();
  const int h = height.height();
  ScalarField vis(w, h, 1.0);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const double z = height(x, y);
      switch (light.kind) {
        case LightKind::directional:
          vis(x, y) = occ.occluded_directional(x, y, z, -light.direction) ? 0.0 : 1.0;
          break;
        case LightKind::point:
          vis(x, y) = occ.occluded_point(x, y, z, light.position) ? 0.0 : 1.0;
          break;
        case LightKind::area_rect: {
          const int n = std::max(1, samples);
          int visible = 0;
          const std::uint64_t pixel = static_cast<std::uint64_t>(y) * w + x;
          for (int s = 0; s < n; ++s) {
            const Vec3 p = area_light_sample(light, s, n, pixel, 0);
            visible += occ.occluded_point(x, y, z, p) ? 0 : 1;
          }
          vis(x, y) = static_cast<double>(visible) / n;
          break;
        }
      }
    }
  });
  return vis;
}

}  // namespace mockshade
