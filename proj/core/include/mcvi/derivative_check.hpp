#pragma once

#include "mcvi/fd_oracle.hpp"
#include "mcvi/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mcvi {

struct DerivativeCheckConfig {
  std::size_t points = 20;
  std::uint64_t seed = 0;
  /// Random points are drawn as z ~ N(0, point_scale^2 I).
  double point_scale = 0.5;
  FdConfig fd;
  double grad_tol = 1e-5;   // relative, componentwise
  double hvp_tol = 1e-4;    // relative norm
  double symmetry_tol = 1e-8;
  double dense_tol = 1e-10;
  /// Upper bound on tries per point when the model rejects points near kinks.
  std::size_t max_tries = 10000;
};

struct DerivativeCheckResult {
  std::string model;
  std::size_t dim = 0;
  std::size_t points = 0;
  double max_grad_err = 0.0;
  double max_hvp_err = 0.0;
  double max_symmetry_err = 0.0;
  /// Consistency of full_hessian with hvp and hessian_diag; negative when the
  /// model offers no dense derivatives.
  double max_dense_err = -1.0;
  bool passed = false;
  std::vector<std::string> failures;
};

/// Compares analytic gradient and HVP with the finite-difference oracles at
/// seeded random points. BNN points are resampled until every ReLU
/// pre-activation sits well clear of its kink.
DerivativeCheckResult check_derivatives(const LogDensityModel& model, const DerivativeCheckConfig& cfg);

}  // namespace mcvi
