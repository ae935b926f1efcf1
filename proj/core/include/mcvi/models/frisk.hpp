#pragma once

#include "mcvi/datasets.hpp"
#include "mcvi/model.hpp"

namespace mcvi {

/// Hierarchical Poisson GLM over an ethnicity x precinct grid.
///
///   mu, ln s2_alpha, ln s2_beta ~ N(0, prior_scale^2)
///   alpha_e ~ N(0, s2_alpha),  beta_p ~ N(0, s2_beta)
///   Y_ep ~ Poisson(exp(mu + alpha_e + beta_p + ln N_ep))
///
/// Latent layout: z = [mu, ln s2_alpha, ln s2_beta, alpha_1..E, beta_1..P].
class FriskModel final : public LogDensityModel {
 public:
  explicit FriskModel(FriskDataset data, double prior_scale = 10.0);

  std::size_t dim() const override { return static_cast<std::size_t>(3 + ethnicities_ + precincts_); }
  std::string name() const override { return "frisk"; }

  double log_density(const Vec& z) const override;
  Vec gradient(const Vec& z) const override;
  std::unique_ptr<PreparedPoint> prepare(const Vec& z) const override;

  bool has_hessian_diag() const override { return true; }
  bool has_full_hessian() const override { return true; }
  Vec hessian_diag(const Vec& z) const override;
  Mat full_hessian(const Vec& z) const override;

  int ethnicities() const { return ethnicities_; }
  int precincts() const { return precincts_; }
  const FriskDataset& data() const { return data_; }

  static constexpr Eigen::Index kMu = 0;
  static constexpr Eigen::Index kLogVarAlpha = 1;
  static constexpr Eigen::Index kLogVarBeta = 2;
  Eigen::Index alpha_index(int e) const { return 3 + e; }
  Eigen::Index beta_index(int p) const { return 3 + ethnicities_ + p; }

  /// Poisson rates exp(eta) on the grid; throws ModelError on overflow.
  Mat rates(const Vec& z) const;

 private:
  friend class FriskPrepared;

  FriskDataset data_;
  int ethnicities_;
  int precincts_;
  double prior_var_;
  Mat counts_;        // Y as doubles
  Mat log_exposure_;  // ln N
  double log_factorial_sum_ = 0.0;
};

}  // namespace mcvi
