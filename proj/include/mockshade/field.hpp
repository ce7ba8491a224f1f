#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace mockshade {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Rgba = Eigen::Vector4d;

enum class WrapMode { clamp, repeat };
enum class Filter { nearest, bilinear };

// Per-value-type helpers so scalar and Eigen-vector fields share one code path.
template <typename T>
struct ValueTraits {
  static constexpr int components = T::RowsAtCompileTime;
  static T zero() { return T::Zero(); }
  static double get(const T& v, int c) { return v[c]; }
  static double& ref(T& v, int c) { return v[c]; }
};

template <>
struct ValueTraits<double> {
  static constexpr int components = 1;
  static double zero() { return 0.0; }
  static double get(double v, int) { return v; }
  static double& ref(double& v, int) { return v; }
};

template <>
struct ValueTraits<std::uint8_t> {
  static constexpr int components = 1;
  static std::uint8_t zero() { return 0; }
  static double get(std::uint8_t v, int) { return v; }
};

/// A discretised function over the unit square, stored row-major.
///
/// Pixel (x, y) is centred at ((x + 0.5) / width, (y + 0.5) / height), so a
/// 1x1 field behaves as a constant. Values are unclamped; colour fields hold
/// linear-light RGBA.
template <typename T>
class Field2D {
 public:
  using value_type = T;

  Field2D() = default;

  Field2D(int width, int height, const T& fill = ValueTraits<T>::zero(),
          WrapMode wrap = WrapMode::clamp)
      : width_(width), height_(height), wrap_(wrap) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("Field2D dimensions must be at least 1x1");
    }
    values_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  WrapMode wrap() const { return wrap_; }
  void set_wrap(WrapMode wrap) { wrap_ = wrap; }

  T& operator()(int x, int y) { return values_[index(x, y)]; }
  const T& operator()(int x, int y) const { return values_[index(x, y)]; }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  /// Value at integer coordinates, resolving out-of-range indices by wrap mode.
  const T& at_wrapped(int x, int y) const {
    return (*this)(resolve(x, width_), resolve(y, height_));
  }

  int resolve(int i, int n) const {
    if (wrap_ == WrapMode::repeat) {
      int r = i % n;
      return r < 0 ? r + n : r;
    }
    return std::clamp(i, 0, n - 1);
  }

  bool same_shape(const Field2D& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Field2D& a, const Field2D& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.values_ == b.values_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  WrapMode wrap_ = WrapMode::clamp;
  std::vector<T> values_;
};

using ScalarField = Field2D<double>;
using Vec2Field = Field2D<Vec2>;
using Vec3Field = Field2D<Vec3>;
using ColorField = Field2D<Rgba>;
using MaskField = Field2D<std::uint8_t>;

struct SampleSpec {
  Filter filter = Filter::bilinear;
  double u = 0.0;
  double v = 0.0;
};

inline double pixel_center(int i, int n) { return (i + 0.5) / n; }

template <typename T>
T sample(const Field2D<T>& field, const SampleSpec& spec) {
  const int w = field.width();
  const int h = field.height();
  if (spec.filter == Filter::nearest) {
    const int x = static_cast<int>(std::floor(spec.u * w));
    const int y = static_cast<int>(std::floor(spec.v * h));
    return field.at_wrapped(x, y);
  }
  const double fx = spec.u * w - 0.5;
  const double fy = spec.v * h - 0.5;
  const double x0f = std::floor(fx);
  const double y0f = std::floor(fy);
  const double tx = fx - x0f;
  const double ty = fy - y0f;
  const int x0 = static_cast<int>(x0f);
  const int y0 = static_cast<int>(y0f);
  const T& a = field.at_wrapped(x0, y0);
  const T& b = field.at_wrapped(x0 + 1, y0);
  const T& c = field.at_wrapped(x0, y0 + 1);
  const T& d = field.at_wrapped(x0 + 1, y0 + 1);
  // Skip zero-weight taps so exact pixel centres reproduce stored values.
  if (tx == 0.0 && ty == 0.0) return a;
  return T((1.0 - ty) * ((1.0 - tx) * a + tx * b) + ty * ((1.0 - tx) * c + tx * d));
}

template <typename T>
T sample(const Field2D<T>& field, double u, double v, Filter filter = Filter::bilinear) {
  return sample(field, SampleSpec{filter, u, v});
}

template <typename T, typename Fn>
auto map(const Field2D<T>& field, Fn&& fn) {
  using R = std::decay_t<decltype(fn(field[0]))>;
  Field2D<R> out(field.width(), field.height(), ValueTraits<R>::zero(), field.wrap());
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = fn(field[i]);
  return out;
}

template <typename T>
Field2D<T> resample(const Field2D<T>& field, int width, int height,
                    Filter filter = Filter::bilinear) {
  if (field.width() == width && field.height() == height) return field;
  Field2D<T> out(width, height, ValueTraits<T>::zero(), field.wrap());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out(x, y) = sample(field, pixel_center(x, width), pixel_center(y, height), filter);
    }
  }
  return out;
}

template <typename T>
T mean(const Field2D<T>& field) {
  T acc = ValueTraits<T>::zero();
  for (const auto& v : field.values()) acc += v;
  return T(acc / static_cast<double>(field.size()));
}

/// Normalised Gaussian taps for offsets -r..r with r = ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur; borders follow the field's wrap mode.
template <typename T>
Field2D<T> gaussian_blur(const Field2D<T>& field, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0) return field;
  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = field.width();
  const int h = field.height();
  Field2D<T> tmp(w, h, ValueTraits<T>::zero(), field.wrap());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      T acc = ValueTraits<T>::zero();
      for (int o = -r; o <= r; ++o) acc += k[o + r] * field.at_wrapped(x + o, y);
      tmp(x, y) = acc;
    }
  }
  Field2D<T> out(w, h, ValueTraits<T>::zero(), field.wrap());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      T acc = ValueTraits<T>::zero();
      for (int o = -r; o <= r; ++o) acc += k[o + r] * tmp.at_wrapped(x, y + o);
      out(x, y) = acc;
    }
  }
  return out;
}

/// Central differences inside, one-sided at the border. The result is in
/// height units per unit-square length.
Vec2Field finite_diff_gradient(const ScalarField& height);

/// Unit normals (-h_u, -h_v, 1)/|.| of a height field.
Vec3Field normals_from_height(const ScalarField& height);

inline double luminance(const Rgba& c) {
  return 0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2];
}

}  // namespace mockshade
