#pragma once

// Central finite-difference oracles. These only ever back tests and the
// check-grads command; estimators use the models' analytic derivatives.

#include "mcvi/model.hpp"

namespace mcvi {

struct FdConfig {
  double step = 1e-5;
};

Vec fd_grad_oracle(const LogDensityModel& model, const Vec& z, const FdConfig& cfg = {});

/// (grad(z + h v) - grad(z - h v)) / 2h
Vec fd_hvp_oracle(const LogDensityModel& model, const Vec& z, const Vec& v, const FdConfig& cfg = {});

Vec fd_hessian_diag_oracle(const LogDensityModel& model, const Vec& z, const FdConfig& cfg = {});

}  // namespace mcvi
