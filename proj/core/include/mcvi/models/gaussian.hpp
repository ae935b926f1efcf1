#pragma once

#include "mcvi/model.hpp"

namespace mcvi {

/// Multivariate normal target N(mean, precision^-1). Its gradient is affine,
/// so the linearized control variate reproduces it exactly.
class GaussianModel final : public LogDensityModel {
 public:
  /// Throws std::invalid_argument if precision is not symmetric positive definite.
  GaussianModel(Vec mean, Mat precision);

  std::size_t dim() const override { return static_cast<std::size_t>(mean_.size()); }
  std::string name() const override { return "gaussian"; }

  double log_density(const Vec& z) const override;
  Vec gradient(const Vec& z) const override;
  std::unique_ptr<PreparedPoint> prepare(const Vec& z) const override;

  bool has_hessian_diag() const override { return true; }
  bool has_full_hessian() const override { return true; }
  Vec hessian_diag(const Vec& z) const override;
  Mat full_hessian(const Vec& z) const override;

  const Vec& mean() const { return mean_; }
  const Mat& precision() const { return precision_; }
  /// Marginal standard deviations sqrt(diag(precision^-1)).
  Vec marginal_sd() const;

 private:
  Vec mean_;
  Mat precision_;
  double log_normalizer_ = 0.0;
};

/// A D-dimensional Gaussian target with a dense random SPD precision,
/// deterministic in seed.
GaussianModel random_gaussian_model(std::size_t dim, std::uint64_t seed);

}  // namespace mcvi
