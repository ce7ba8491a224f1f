#include "mockshade/anamorph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Geometry>

#include "mockshade/image_io.hpp"
#include "mockshade/parallel.hpp"
#include "mockshade/scene_io.hpp"

namespace mockshade {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

ViewCamera::ViewCamera(const Camera& camera, double aspect) : camera_(camera), aspect_(aspect) {
  if (camera.kind == CameraKind::ortho_frontal) {
    forward_ = Vec3(0.0, 0.0, -1.0);
    right_ = Vec3::UnitX();
    down_ = Vec3::UnitY();
    return;
  }
  forward_ = (camera.look_at - camera.eye).normalized();
  Vec3 r = forward_.cross(Vec3::UnitY());
  if (r.norm() < 1e-9) r = forward_.cross(Vec3(0.0, 0.0, -1.0));
  right_ = r.normalized();
  down_ = right_.cross(forward_);
  tan_half_ = std::tan(0.5 * camera.fov_y);
}

Ray ViewCamera::ray(double u, double v) const {
  if (camera_.kind == CameraKind::ortho_frontal) {
    return {Vec3(u, v, 1e3), forward_};
  }
  const double x = (2.0 * u - 1.0) * tan_half_ * aspect_;
  const double y = (2.0 * v - 1.0) * tan_half_;
  return {camera_.eye, (forward_ + x * right_ + y * down_).normalized()};
}

std::optional<Vec2> ViewCamera::project(const Vec3& p) const {
  if (camera_.kind == CameraKind::ortho_frontal) return Vec2(p.x(), p.y());
  const Vec3 q = p - camera_.eye;
  const double z = q.dot(forward_);
  if (z <= 0.0) return std::nullopt;
  const double x = q.dot(right_) / z;
  const double y = q.dot(down_) / z;
  return Vec2(0.5 * (x / (tan_half_ * aspect_) + 1.0), 0.5 * (y / tan_half_ + 1.0));
}

Vec3 ViewCamera::toward_eye(const Vec3& p) const {
  if (camera_.kind == CameraKind::ortho_frontal) return -forward_;
  return (camera_.eye - p).normalized();
}

double ViewCamera::eye_distance(const Vec3& p) const {
  if (camera_.kind == CameraKind::ortho_frontal) return kInf;
  return (camera_.eye - p).norm();
}

Receiver::Receiver(Shape shape) : shape_(std::move(shape)) {
  if (auto* pl = std::get_if<PlaneReceiver>(&shape_)) {
    const double len = pl->normal.norm();
    if (!(len > 0.0)) throw std::invalid_argument("plane normal must be non-zero");
    pl->normal /= len;
    const Vec3 hint = std::abs(pl->normal.y()) < 0.9 ? Vec3::UnitY() : Vec3::UnitZ();
    e1_ = hint.cross(pl->normal).normalized();
    e2_ = pl->normal.cross(e1_);
    o_ = pl->offset * pl->normal;
  } else {
    const auto& hf = std::get<HeightReceiver>(shape_);
    if (hf.height.empty()) throw std::invalid_argument("height-field receiver needs a height map");
    if (!(hf.size.x() > 0.0 && hf.size.y() > 0.0)) {
      throw std::invalid_argument("height-field placement must have positive size");
    }
    hmin_ = kInf;
    hmax_ = -kInf;
    for (double h : hf.height.values()) {
      if (!std::isfinite(h)) throw std::invalid_argument("height-field receiver must be finite");
      hmin_ = std::min(hmin_, h);
      hmax_ = std::max(hmax_, h);
    }
  }
}

Receiver Receiver::plane(const Vec3& normal, double offset) {
  return Receiver(PlaneReceiver{normal, offset});
}

Receiver Receiver::slanted_plane(double angle, const Vec3& point) {
  const Vec3 n(0.0, -std::sin(angle), std::cos(angle));
  return plane(n, n.dot(point));
}

Receiver Receiver::height_field(ScalarField height, const Vec2& origin, const Vec2& size) {
  return Receiver(HeightReceiver{std::move(height), origin, size});
}

double Receiver::surface_z(const Vec2& xy) const {
  const auto& hf = std::get<HeightReceiver>(shape_);
  const Vec2 uv = (xy - hf.origin).cwiseQuotient(hf.size);
  return sample(hf.height, uv.x(), uv.y(), Filter::bilinear);
}

double Receiver::march_step(const Ray& ray) const {
  const auto& hf = std::get<HeightReceiver>(shape_);
  const double texel = std::min(hf.size.x() / hf.height.width(), hf.size.y() / hf.height.height());
  const double xy_speed = std::hypot(ray.dir.x(), ray.dir.y());
  return 0.5 * texel / std::max(xy_speed, 1e-12);
}

std::optional<ReceiverHit> Receiver::intersect(const Ray& ray) const {
  if (const auto* pl = std::get_if<PlaneReceiver>(&shape_)) {
    const double denom = pl->normal.dot(ray.dir);
    if (std::abs(denom) < 1e-15) return std::nullopt;
    const double t = (pl->offset - pl->normal.dot(ray.origin)) / denom;
    if (!(t > 0.0)) return std::nullopt;
    const Vec3 d = ray.at(t) - o_;
    return ReceiverHit{t, Vec2(d.dot(e1_), d.dot(e2_))};
  }
  const auto& hf = std::get<HeightReceiver>(shape_);
  // Clip to the box holding the surface.
  double t0 = 0.0;
  double t1 = kInf;
  const Vec3 lo(hf.origin.x(), hf.origin.y(), hmin_);
  const Vec3 hi(hf.origin.x() + hf.size.x(), hf.origin.y() + hf.size.y(), hmax_);
  for (int a = 0; a < 3; ++a) {
    if (std::abs(ray.dir[a]) < 1e-15) {
      if (ray.origin[a] < lo[a] || ray.origin[a] > hi[a]) return std::nullopt;
      continue;
    }
    double a0 = (lo[a] - ray.origin[a]) / ray.dir[a];
    double a1 = (hi[a] - ray.origin[a]) / ray.dir[a];
    if (a0 > a1) std::swap(a0, a1);
    t0 = std::max(t0, a0);
    t1 = std::min(t1, a1);
  }
  if (t0 > t1) return std::nullopt;

  auto f = [&](double t) {
    const Vec3 p = ray.at(t);
    return p.z() - surface_z(Vec2(p.x(), p.y()));
  };
  auto hit_at = [&](double t) {
    const Vec3 p = ray.at(t);
    return ReceiverHit{t, (Vec2(p.x(), p.y()) - hf.origin).cwiseQuotient(hf.size)};
  };
  double prev_t = t0;
  if (f(t0) <= 0.0) return hit_at(t0);
  const double step = march_step(ray);
  const int steps = static_cast<int>(std::ceil((t1 - t0) / step));
  for (int k = 1; k <= steps; ++k) {
    const double t = std::min(t1, t0 + k * step);
    const double ft = f(t);
    if (ft <= 0.0) {
      double a = prev_t;
      double b = t;
      for (int i = 0; i < 60 && b - a > 1e-14 * (1.0 + b); ++i) {
        const double m = 0.5 * (a + b);
        (f(m) > 0.0 ? a : b) = m;
      }
      return hit_at(0.5 * (a + b));
    }
    prev_t = t;
  }
  return std::nullopt;
}

Vec3 Receiver::point(const Vec2& param) const {
  if (is_plane()) return o_ + param.x() * e1_ + param.y() * e2_;
  const auto& hf = std::get<HeightReceiver>(shape_);
  const Vec2 xy = hf.origin + param.cwiseProduct(hf.size);
  return Vec3(xy.x(), xy.y(), sample(hf.height, param.x(), param.y(), Filter::bilinear));
}

bool Receiver::occluded_from(const Vec2& param, const ViewCamera& view) const {
  if (is_plane()) return false;
  const auto& hf = std::get<HeightReceiver>(shape_);
  const Vec3 p = point(param);
  const Ray ray{p, view.toward_eye(p)};
  const double limit = view.eye_distance(p);
  const double step = march_step(ray);
  const double tol = 1e-7 * (1.0 + std::abs(hmax_ - hmin_));
  for (double t = 0.5 * step; t < limit; t += step) {
    const Vec3 q = ray.at(t);
    if (q.z() > hmax_) return false;
    const Vec2 uv = (Vec2(q.x(), q.y()) - hf.origin).cwiseQuotient(hf.size);
    if (uv.x() < 0.0 || uv.y() < 0.0 || uv.x() > 1.0 || uv.y() > 1.0) return false;
    if (surface_z(Vec2(q.x(), q.y())) > q.z() + tol) return true;
  }
  return false;
}

Vec2 BakedAnamorph::texcoord(const Vec2& param) const {
  return (param - param_min).cwiseQuotient(param_max - param_min);
}

Vec2 BakedAnamorph::param_at(const Vec2& tc) const {
  return param_min + tc.cwiseProduct(param_max - param_min);
}

BakedAnamorph bake(const ColorField& source, const Camera& vantage, const Receiver& receiver,
                   const BakeOptions& options) {
  if (options.texture_scale < 1) throw std::invalid_argument("texture_scale must be >= 1");
  const int sw = source.width();
  const int sh = source.height();
  const ViewCamera view(vantage, static_cast<double>(sw) / sh);

  // Receiver region seen through the picture: bounding box of the hits of
  // rays through every pixel corner.
  Vec2 lo = Vec2::Constant(kInf);
  Vec2 hi = Vec2::Constant(-kInf);
  std::vector<Vec2> row_lo(sh + 1, lo), row_hi(sh + 1, hi);
  parallel_rows(sh + 1, [&](int j) {
    for (int i = 0; i <= sw; ++i) {
      const auto hit = receiver.intersect(view.ray(static_cast<double>(i) / sw,
                                                   static_cast<double>(j) / sh));
      if (!hit) continue;
      row_lo[j] = row_lo[j].cwiseMin(hit->param);
      row_hi[j] = row_hi[j].cwiseMax(hit->param);
    }
  });
  for (int j = 0; j <= sh; ++j) {
    lo = lo.cwiseMin(row_lo[j]);
    hi = hi.cwiseMax(row_hi[j]);
  }
  if (!(lo.x() < hi.x() && lo.y() < hi.y())) {
    throw std::invalid_argument("receiver is not visible from the vantage point");
  }

  BakedAnamorph out{receiver,
                    ColorField(sw * options.texture_scale, sh * options.texture_scale, Rgba::Zero()),
                    lo,
                    hi,
                    vantage,
                    sw,
                    sh,
                    MaskField(sw * options.texture_scale, sh * options.texture_scale, 0),
                    0};
  const int tw = out.texture.width();
  const int th = out.texture.height();
  std::vector<int> occluded_rows(th, 0);
  parallel_rows(th, [&](int y) {
    for (int x = 0; x < tw; ++x) {
      const Vec2 param = out.param_at(Vec2(pixel_center(x, tw), pixel_center(y, th)));
      const auto img = view.project(receiver.point(param));
      if (!img || img->x() < 0.0 || img->y() < 0.0 || img->x() > 1.0 || img->y() > 1.0) continue;
      if (receiver.occluded_from(param, view)) {
        out.occluded(x, y) = 1;
        ++occluded_rows[y];
        continue;
      }
      out.texture(x, y) = sample(source, img->x(), img->y(), options.filter);
    }
  });
  for (int c : occluded_rows) out.occluded_count += c;
  return out;
}

ColorField render_view(const BakedAnamorph& baked, const Camera& viewer, int width, int height,
                       Filter filter) {
  if (width < 1 || height < 1) throw std::invalid_argument("resolution must be positive");
  const ViewCamera view(viewer, static_cast<double>(width) / height);
  ColorField out(width, height, Rgba::Zero());
  parallel_rows(height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      const auto hit = baked.receiver.intersect(view.ray(pixel_center(x, width), pixel_center(y, height)));
      if (!hit) continue;
      const Vec2 tc = baked.texcoord(hit->param);
      if (tc.x() < 0.0 || tc.y() < 0.0 || tc.x() > 1.0 || tc.y() > 1.0) continue;
      out(x, y) = sample(baked.texture, tc.x(), tc.y(), filter);
    }
  });
  return out;
}

double psnr(const ColorField& reference, const ColorField& test) {
  if (reference.width() != test.width() || reference.height() != test.height()) {
    throw std::invalid_argument("psnr needs images of equal size");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (!(reference[i][3] > 0.0)) continue;
    sum += (reference[i].head<3>() - test[i].head<3>()).squaredNorm();
    n += 3;
  }
  if (n == 0) throw std::invalid_argument("reference has no coverage");
  const double mse = sum / n;
  return mse == 0.0 ? kInf : 10.0 * std::log10(1.0 / mse);
}

namespace {

json vec_json(const auto& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> json_vec(const json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != N) {
    throw std::invalid_argument(std::string(what) + " needs " + std::to_string(N) + " components");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = v[i];
  return out;
}

}  // namespace

json receiver_to_json(const Receiver& receiver, const std::string& height_path) {
  if (const auto* pl = std::get_if<PlaneReceiver>(&receiver.shape())) {
    return {{"kind", "plane"}, {"normal", vec_json(pl->normal)}, {"offset", pl->offset}};
  }
  const auto& hf = std::get<HeightReceiver>(receiver.shape());
  return {{"kind", "height_field"},
          {"height", height_path},
          {"origin", vec_json(hf.origin)},
          {"size", vec_json(hf.size)}};
}

Receiver receiver_from_json(const json& j, const fs::path& base_dir) {
  const std::string kind = j.value("kind", "");
  if (kind == "plane") {
    if (j.contains("angle")) {
      const Vec3 through = j.contains("point") ? json_vec<3>(j.at("point"), "point") : Vec3::Zero();
      return Receiver::slanted_plane(j.at("angle").get<double>(), through);
    }
    return Receiver::plane(json_vec<3>(j.at("normal"), "normal"), j.value("offset", 0.0));
  }
  if (kind == "height_field") {
    const fs::path p = base_dir / j.at("height").get<std::string>();
    ScalarField h = p.extension() == ".pfm" ? load_pfm_scalar(p) : load_png_scalar(p);
    return Receiver::height_field(std::move(h), json_vec<2>(j.at("origin"), "origin"),
                                  json_vec<2>(j.at("size"), "size"));
  }
  throw std::invalid_argument("unknown receiver kind '" + kind + "'");
}

void save_baked(const BakedAnamorph& baked, const fs::path& prefix) {
  const std::string stem = prefix.filename().string();
  auto sibling = [&](const std::string& suffix) {
    fs::path p = prefix;
    p.replace_filename(stem + suffix);
    return p;
  };
  std::string height_name;
  if (!baked.receiver.is_plane()) {
    height_name = stem + "_height.pfm";
    save_pfm(sibling("_height.pfm"), std::get<HeightReceiver>(baked.receiver.shape()).height);
  }
  save_png(sibling(".png"), baked.texture, 16);
  const json doc = {{"texture", stem + ".png"},
                    {"receiver", receiver_to_json(baked.receiver, height_name)},
                    {"vantage", camera_to_json(baked.vantage)},
                    {"param_min", vec_json(baked.param_min)},
                    {"param_max", vec_json(baked.param_max)},
                    {"source_size", {baked.source_width, baked.source_height}},
                    {"occluded_texels", baked.occluded_count}};
  write_file(sibling(".json"), doc.dump(2) + "\n");
}

BakedAnamorph load_baked(const fs::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw IoError("cannot open " + sidecar.string());
  const json doc = json::parse(in);
  const fs::path base = sidecar.parent_path();
  BakedAnamorph b{receiver_from_json(doc.at("receiver"), base),
                  load_png_color(base / doc.at("texture").get<std::string>()),
                  json_vec<2>(doc.at("param_min"), "param_min"),
                  json_vec<2>(doc.at("param_max"), "param_max"),
                  camera_from_json(doc.at("vantage")),
                  doc.at("source_size").at(0).get<int>(),
                  doc.at("source_size").at(1).get<int>(),
                  MaskField(1, 1, 0),
                  doc.value("occluded_texels", 0)};
  b.occluded = MaskField(b.texture.width(), b.texture.height(), 0);
  return b;
}

}  // namespace mockshade
