#pragma once

#include <stdexcept>

#include "mockshade/field.hpp"

namespace mockshade {

inline constexpr double kDefaultSlopeEpsilon = 1e-3;

/// Slope field p = (-n_x / n_z, -n_y / n_z). Pixels with |n_z| <= eps are
/// masked (mask = 1) and carry a zero slope.
struct SlopeField {
  Vec2Field slope;
  MaskField mask;
};

SlopeField slopes_from_normals(const Vec3Field& normals, double eps = kDefaultSlopeEpsilon);

/// Unit normals (-p_x, -p_y, 1)/|.| for a slope field.
Vec3Field normals_from_slopes(const Vec2Field& slopes);

struct CurlResult {
  ScalarField residual;  // dp_y/du - dp_x/dv, zero where flagged
  MaskField flagged;     // 1 where the curl could not be evaluated
  double masked_fraction = 0.0;
  double max_abs = 0.0;  // over unflagged pixels
};

/// Discrete curl of the slope field behind a normal map. Zero for fields that
/// come from a height function, up to discretisation error; non-conservative
/// ("impossible") shapes show up as non-zero bands.
CurlResult curl_residual(const Vec3Field& normals, double eps = kDefaultSlopeEpsilon);

class SolverDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IntegrationResult {
  ScalarField height;         // mean zero over each connected unmasked region
  double residual_norm = 0.0; // RMS of |grad h - p| over unmasked pixels
  int iterations = 0;
};

struct IntegrationOptions {
  double slope_epsilon = kDefaultSlopeEpsilon;
  double tolerance = 1e-8;
  int max_iterations = 5000;
};

/// Least-squares height recovery: minimises sum |grad h - p|^2 with forward
/// differences on pixel edges (Neumann boundary). Throws SolverDiverged when
/// the iterative solve does not reach the relative tolerance.
IntegrationResult integrate_normals(const Vec3Field& normals, const IntegrationOptions& options = {});

}  // namespace mockshade
