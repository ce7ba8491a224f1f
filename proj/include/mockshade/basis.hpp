#pragma once

#include <vector>

#include <Eigen/Core>

namespace mockshade {

/// A family of weight functions B_i(w) on [0,1] that are nonnegative and sum
/// to one.
struct WeightBasis {
  enum class Kind { linear, bezier, bspline0 };

  Kind kind = Kind::linear;
  int degree = 1;             // bezier
  std::vector<double> knots;  // bspline0, sorted, first 0 and last 1

  static WeightBasis linear() { return {}; }
  static WeightBasis bezier(int degree) { return {Kind::bezier, degree, {}}; }
  static WeightBasis bspline0(std::vector<double> knots) {
    return {Kind::bspline0, 0, std::move(knots)};
  }
  static WeightBasis uniform_bspline0(int intervals);

  int n_weights() const;
  /// Empty when valid, otherwise a description of the problem.
  const char* invalid_reason() const;

  friend bool operator==(const WeightBasis&, const WeightBasis&) = default;
};

/// Weights at w (clamped to [0,1]). linear: (1-w, w); bezier: Bernstein
/// polynomials; bspline0: indicator of the knot interval holding w, intervals
/// right-open except the last.
Eigen::VectorXd eval_basis(const WeightBasis& basis, double w);

/// Writes weights into out (size n_weights) without allocating.
void eval_basis_into(const WeightBasis& basis, double w, double* out);

}  // namespace mockshade
