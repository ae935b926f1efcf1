#pragma once
// Small analytic models and brute-force reference implementations shared by
// the unit and acceptance tests.

#include "mcvi/datasets.hpp"
#include "mcvi/model.hpp"
#include "mcvi/numerics.hpp"
#include "mcvi/rng.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>

namespace mcvi::testing {

/// ln p = a.z + sum_i c_i z_i^2 / 2 + k sum_i z_i^3 / 6 (separable polynomial).
class PolyModel final : public LogDensityModel {
 public:
  PolyModel(Vec linear, Vec quad, double cubic = 0.0, double constant = 0.0)
      : a_(std::move(linear)), c_(std::move(quad)), k_(cubic), const_(constant) {}

  std::size_t dim() const override { return static_cast<std::size_t>(c_.size()); }
  std::string name() const override { return "poly"; }
  double log_density(const Vec& z) const override {
    check_point(z);
    const auto zz = z.array();
    return const_ + a_.dot(z) + 0.5 * (c_.array() * zz.square()).sum() + k_ / 6.0 * zz.cube().sum();
  }
  Vec gradient(const Vec& z) const override {
    check_point(z);
    return a_.array() + c_.array() * z.array() + 0.5 * k_ * z.array().square();
  }
  bool has_hessian_diag() const override { return true; }
  bool has_full_hessian() const override { return true; }
  Vec hessian_diag(const Vec& z) const override { return c_.array() + k_ * z.array(); }
  Mat full_hessian(const Vec& z) const override { return hessian_diag(z).asDiagonal(); }

  std::unique_ptr<PreparedPoint> prepare(const Vec& z) const override {
    struct P final : PreparedPoint {
      Vec z, g, h;
      const Vec& point() const override { return z; }
      const Vec& gradient() const override { return g; }
      Vec hvp(const Vec& v) const override { return h.array() * v.array(); }
    };
    auto p = std::make_unique<P>();
    p->z = z;
    p->g = gradient(z);
    p->h = hessian_diag(z);
    return p;
  }

 private:
  Vec a_, c_;
  double k_;
  double const_;
};

/// ln p = -z^2/2 in one dimension.
inline PolyModel standard_quadratic() { return PolyModel(Vec::Zero(1), Vec::Constant(1, -1.0)); }

/// ln p = -z^2/2 - 0.1 z^3 in one dimension.
inline PolyModel cubic_model() { return PolyModel(Vec::Zero(1), Vec::Constant(1, -1.0), -0.6); }

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vec random_vec(std::uint64_t seed, std::uint64_t index, std::size_t n, double scale = 1.0) {
  return scale * normal_draws(RngStream(seed, {0, index, Purpose::kTest}), n);
}

/// Dense symmetric matrix with N(0,1) entries.
inline Mat random_symmetric(std::uint64_t seed, std::size_t n) {
  RngStream rng(seed, {0, 0, Purpose::kTest});
  Mat a(n, n);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.normal();
  return a;
}

/// Term-by-term frisk log joint, written independently of the model code.
inline double frisk_logp_reference(const FriskDataset& d, const Vec& z, double prior_scale = 10.0) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  auto normal_lpdf = [&](double x, double var) { return -0.5 * x * x / var - 0.5 * std::log(var) - half_log_2pi; };
  const double pv = prior_scale * prior_scale;
  double lp = normal_lpdf(z[0], pv) + normal_lpdf(z[1], pv) + normal_lpdf(z[2], pv);
  for (int e = 0; e < d.ethnicities; ++e) lp += normal_lpdf(z[3 + e], std::exp(z[1]));
  for (int p = 0; p < d.precincts; ++p) lp += normal_lpdf(z[3 + d.ethnicities + p], std::exp(z[2]));
  for (int e = 0; e < d.ethnicities; ++e) {
    for (int p = 0; p < d.precincts; ++p) {
      const double eta = z[0] + z[3 + e] + z[3 + d.ethnicities + p] + std::log(static_cast<double>(d.arrest(e, p)));
      const double y = static_cast<double>(d.stop(e, p));
      lp += y * eta - std::exp(eta) - std::lgamma(y + 1.0);
    }
  }
  return lp;
}

/// Naive BNN log joint with the same parameter layout as BnnModel.
inline double bnn_logp_reference(const RegressionDataset& data, std::size_t hidden, const Vec& z,
                                 double shape = 1.0, double rate = 0.1) {
  const auto n = data.x.rows();
  const auto p = data.x.cols();
  const auto h = static_cast<Eigen::Index>(hidden);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const Eigen::Index nw = (p + 1) * h + h + 1;
  const double ua = z[nw];
  const double ut = z[nw + 1];
  const double alpha = std::exp(ua);
  const double tau = std::exp(ut);
  double lp = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    double out = z[(p + 1) * h + h];  // b2
    for (Eigen::Index j = 0; j < h; ++j) {
      double a = z[p * h + j];  // b1_j
      for (Eigen::Index k = 0; k < p; ++k) a += data.x(r, k) * z[j * p + k];
      out += z[(p + 1) * h + j] * std::max(a, 0.0);
    }
    const double res = data.y[r] - out;
    lp += -0.5 * tau * res * res + 0.5 * ut - half_log_2pi;
  }
  for (Eigen::Index i = 0; i < nw; ++i) lp += -0.5 * alpha * z[i] * z[i] + 0.5 * ua - half_log_2pi;
  auto log_gamma_pdf = [&](double x, double u) {
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * u - rate * x;
  };
  lp += log_gamma_pdf(alpha, ua) + ua + log_gamma_pdf(tau, ut) + ut;
  return lp;
}

}  // namespace mcvi::testing
