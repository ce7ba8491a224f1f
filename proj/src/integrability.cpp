#include "mockshade/integrability.hpp"

#include <cmath>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

namespace mockshade {

SlopeField slopes_from_normals(const Vec3Field& normals, double eps) {
  SlopeField out{Vec2Field(normals.width(), normals.height()),
                 MaskField(normals.width(), normals.height(), 0)};
  for (std::size_t i = 0; i < normals.size(); ++i) {
    const Vec3& n = normals[i];
    if (std::abs(n.z()) <= eps) {
      out.mask[i] = 1;
      out.slope[i] = Vec2::Zero();
    } else {
      out.slope[i] = Vec2(-n.x() / n.z(), -n.y() / n.z());
    }
  }
  return out;
}

Vec3Field normals_from_slopes(const Vec2Field& slopes) {
  return map(slopes, [](const Vec2& p) { return Vec3(Vec3(-p.x(), -p.y(), 1.0).normalized()); });
}

namespace {

// Derivative of one slope component along an axis, skipping masked neighbours.
// Returns false when no neighbour is usable.
bool masked_derivative(const SlopeField& s, int x, int y, int dx, int dy, int comp, double inv_step,
                       double& out) {
  const int w = s.slope.width();
  const int h = s.slope.height();
  auto usable = [&](int xx, int yy) {
    return xx >= 0 && yy >= 0 && xx < w && yy < h && s.mask(xx, yy) == 0;
  };
  const bool fwd = usable(x + dx, y + dy);
  const bool bwd = usable(x - dx, y - dy);
  if (fwd && bwd) {
    out = (s.slope(x + dx, y + dy)[comp] - s.slope(x - dx, y - dy)[comp]) * 0.5 * inv_step;
  } else if (fwd) {
    out = (s.slope(x + dx, y + dy)[comp] - s.slope(x, y)[comp]) * inv_step;
  } else if (bwd) {
    out = (s.slope(x, y)[comp] - s.slope(x - dx, y - dy)[comp]) * inv_step;
  } else {
    return false;
  }
  return true;
}

}  // namespace

CurlResult curl_residual(const Vec3Field& normals, double eps) {
  const SlopeField s = slopes_from_normals(normals, eps);
  const int w = normals.width();
  const int h = normals.height();
  CurlResult out{ScalarField(w, h, 0.0), MaskField(w, h, 0)};
  std::size_t flagged = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double dpy_du = 0.0;
      double dpx_dv = 0.0;
      const bool ok = s.mask(x, y) == 0 && masked_derivative(s, x, y, 1, 0, 1, w, dpy_du) &&
                      masked_derivative(s, x, y, 0, 1, 0, h, dpx_dv);
      if (!ok) {
        out.flagged(x, y) = 1;
        ++flagged;
        continue;
      }
      const double r = dpy_du - dpx_dv;
      out.residual(x, y) = r;
      out.max_abs = std::max(out.max_abs, std::abs(r));
    }
  }
  out.masked_fraction = static_cast<double>(flagged) / static_cast<double>(normals.size());
  return out;
}

IntegrationResult integrate_normals(const Vec3Field& normals, const IntegrationOptions& options) {
  const SlopeField s = slopes_from_normals(normals, options.slope_epsilon);
  const int w = normals.width();
  const int h = normals.height();
  const int n = w * h;

  struct Edge {
    int a, b;
    double scale;   // 1 / pixel pitch
    double target;  // mean slope along the edge
  };
  std::vector<Edge> edges;
  edges.reserve(2 * static_cast<std::size_t>(n));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int a = y * w + x;
      if (s.mask[a]) continue;
      if (x + 1 < w && !s.mask[a + 1]) {
        edges.push_back({a, a + 1, static_cast<double>(w), 0.5 * (s.slope[a].x() + s.slope[a + 1].x())});
      }
      if (y + 1 < h && !s.mask[a + w]) {
        edges.push_back({a, a + w, static_cast<double>(h), 0.5 * (s.slope[a].y() + s.slope[a + w].y())});
      }
    }
  }

  // Connected components; one pinned node per component fixes the gauge.
  std::vector<std::vector<int>> adjacency(n);
  for (const Edge& e : edges) {
    adjacency[e.a].push_back(e.b);
    adjacency[e.b].push_back(e.a);
  }
  std::vector<int> component(n, -1);
  std::vector<char> pinned(n, 0);
  int components = 0;
  for (int start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    pinned[start] = 1;
    std::vector<int> stack{start};
    component[start] = components;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int nb : adjacency[v]) {
        if (component[nb] < 0) {
          component[nb] = components;
          stack.push_back(nb);
        }
      }
    }
    ++components;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 4 + n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (const Edge& e : edges) {
    const double s2 = e.scale * e.scale;
    const double g = e.scale * e.target;
    if (!pinned[e.a]) {
      triplets.emplace_back(e.a, e.a, s2);
      rhs[e.a] -= g;
    }
    if (!pinned[e.b]) {
      triplets.emplace_back(e.b, e.b, s2);
      rhs[e.b] += g;
    }
    if (!pinned[e.a] && !pinned[e.b]) {
      triplets.emplace_back(e.a, e.b, -s2);
      triplets.emplace_back(e.b, e.a, -s2);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (pinned[i]) triplets.emplace_back(i, i, 1.0);
  }
  Eigen::SparseMatrix<double> system(n, n);
  system.setFromTriplets(triplets.begin(), triplets.end());

  IntegrationResult result;
  Eigen::VectorXd solution = Eigen::VectorXd::Zero(n);
  if (rhs.norm() > 0.0) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        cg;
    cg.setTolerance(options.tolerance);
    cg.setMaxIterations(options.max_iterations);
    cg.compute(system);
    if (cg.info() != Eigen::Success) throw SolverDiverged("preconditioner setup failed");
    solution = cg.solve(rhs);
    result.iterations = static_cast<int>(cg.iterations());
    if (cg.info() != Eigen::Success || cg.error() > options.tolerance) {
      throw SolverDiverged("normal integration did not reach tolerance after " +
                           std::to_string(cg.iterations()) + " iterations (relative residual " +
                           std::to_string(cg.error()) + ")");
    }
  }

  std::vector<double> sum(components, 0.0);
  std::vector<int> count(components, 0);
  for (int i = 0; i < n; ++i) {
    sum[component[i]] += solution[i];
    ++count[component[i]];
  }
  result.height = ScalarField(w, h, 0.0);
  for (int i = 0; i < n; ++i) {
    result.height[i] = s.mask[i] ? 0.0 : solution[i] - sum[component[i]] / count[component[i]];
  }

  double sq = 0.0;
  int unmasked = 0;
  for (const Edge& e : edges) {
    const double r = e.scale * (result.height[e.b] - result.height[e.a]) - e.target;
    sq += r * r;
  }
  for (int i = 0; i < n; ++i) unmasked += s.mask[i] ? 0 : 1;
  result.residual_norm = unmasked > 0 ? std::sqrt(sq / unmasked) : 0.0;
  return result;
}

}  // namespace mockshade
