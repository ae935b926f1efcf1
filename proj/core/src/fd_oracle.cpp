#include "mcvi/fd_oracle.hpp"

#include <cmath>

namespace mcvi {

namespace {

void check_step(const FdConfig& cfg) {
  if (!(cfg.step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
}

double finite_logp(const LogDensityModel& model, const Vec& z) {
  const double v = model.log_density(z);
  if (!std::isfinite(v)) throw ModelError(model.name() + ": non-finite log density during finite differencing");
  return v;
}

Vec finite_grad(const LogDensityModel& model, const Vec& z) {
  Vec g = model.gradient(z);
  if (!g.allFinite()) throw ModelError(model.name() + ": non-finite gradient during finite differencing");
  return g;
}

}  // namespace

Vec fd_grad_oracle(const LogDensityModel& model, const Vec& z, const FdConfig& cfg) {
  check_step(cfg);
  const double h = cfg.step;
  Vec out(z.size());
  Vec probe = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    probe[i] = z[i] + h;
    const double up = finite_logp(model, probe);
    probe[i] = z[i] - h;
    const double down = finite_logp(model, probe);
    probe[i] = z[i];
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

Vec fd_hvp_oracle(const LogDensityModel& model, const Vec& z, const Vec& v, const FdConfig& cfg) {
  check_step(cfg);
  require_same_size(z, v, "fd_hvp_oracle");
  const double h = cfg.step;
  const Vec up = finite_grad(model, z + h * v);
  const Vec down = finite_grad(model, z - h * v);
  return (up - down) / (2.0 * h);
}

Vec fd_hessian_diag_oracle(const LogDensityModel& model, const Vec& z, const FdConfig& cfg) {
  Vec out(z.size());
  Vec basis = Vec::Zero(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    basis[i] = 1.0;
    out[i] = fd_hvp_oracle(model, z, basis, cfg)[i];
    basis[i] = 0.0;
  }
  return out;
}

}  // namespace mcvi
