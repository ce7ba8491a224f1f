#include "mockshade/basis.hpp"

#include <algorithm>
#include <cmath>

namespace mockshade {

WeightBasis WeightBasis::uniform_bspline0(int intervals) {
  std::vector<double> knots(intervals + 1);
  for (int i = 0; i <= intervals; ++i) knots[i] = static_cast<double>(i) / intervals;
  knots.back() = 1.0;
  return bspline0(std::move(knots));
}

int WeightBasis::n_weights() const {
  switch (kind) {
    case Kind::linear: return 2;
    case Kind::bezier: return degree + 1;
    case Kind::bspline0: return static_cast<int>(knots.size()) - 1;
  }
  return 0;
}

const char* WeightBasis::invalid_reason() const {
  if (kind == Kind::bezier && degree < 1) return "bezier degree must be >= 1";
  if (kind == Kind::bspline0) {
    if (knots.size() < 2) return "bspline0 needs at least two knots";
    if (knots.front() != 0.0 || knots.back() != 1.0) return "bspline0 knots must span [0,1]";
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (!(knots[i] > knots[i - 1])) return "bspline0 knots must be strictly increasing";
    }
  }
  return nullptr;
}

void eval_basis_into(const WeightBasis& basis, double w, double* out) {
  w = std::clamp(w, 0.0, 1.0);
  switch (basis.kind) {
    case WeightBasis::Kind::linear:
      out[0] = 1.0 - w;
      out[1] = w;
      return;
    case WeightBasis::Kind::bezier: {
      const int d = basis.degree;
      const double s = 1.0 - w;
      // C(d,i) w^i (1-w)^(d-i), binomials built incrementally.
      double binom = 1.0;
      for (int i = 0; i <= d; ++i) {
        out[i] = binom * std::pow(w, i) * std::pow(s, d - i);
        binom = binom * (d - i) / (i + 1);
      }
      return;
    }
    case WeightBasis::Kind::bspline0: {
      const auto& k = basis.knots;
      const int n = static_cast<int>(k.size()) - 1;
      std::fill(out, out + n, 0.0);
      // upper_bound gives the first knot > w; the interval is the one before it.
      int idx = static_cast<int>(std::upper_bound(k.begin(), k.end(), w) - k.begin()) - 1;
      out[std::clamp(idx, 0, n - 1)] = 1.0;
      return;
    }
  }
}

Eigen::VectorXd eval_basis(const WeightBasis& basis, double w) {
  Eigen::VectorXd out(basis.n_weights());
  eval_basis_into(basis, w, out.data());
  return out;
}

}  // namespace mockshade
