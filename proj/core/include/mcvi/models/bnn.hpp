#pragma once

#include "mcvi/datasets.hpp"
#include "mcvi/model.hpp"

namespace mcvi {

struct BnnConfig {
  std::size_t hidden = 50;
  /// Gamma(shape, rate) hyper-priors on the weight precision and noise precision.
  double gamma_shape = 1.0;
  double gamma_rate = 0.1;
  /// Dense derivatives are offered only up to this many latents.
  std::size_t dense_limit = 200;
};

/// One-hidden-layer ReLU regression network with Gaussian weight prior
/// N(0, 1/alpha) and Gaussian noise N(0, 1/tau).
///
/// Latents are unconstrained: theta = [W1 (P x H, column-major), b1 (H),
/// W2 (H), b2, ln alpha, ln tau]. The log-transform Jacobians of alpha and
/// tau are part of log_density. ReLU'' is taken as 0 and ReLU'(0) as 0.
class BnnModel final : public LogDensityModel {
 public:
  BnnModel(RegressionDataset data, BnnConfig cfg = {});

  std::size_t dim() const override { return num_weights() + 2; }
  std::string name() const override { return "bnn"; }

  double log_density(const Vec& z) const override;
  Vec gradient(const Vec& z) const override;
  std::unique_ptr<PreparedPoint> prepare(const Vec& z) const override;

  bool has_hessian_diag() const override { return dim() <= cfg_.dense_limit; }
  bool has_full_hessian() const override { return dim() <= cfg_.dense_limit; }
  Vec hessian_diag(const Vec& z) const override;
  Mat full_hessian(const Vec& z) const override;

  std::size_t inputs() const { return static_cast<std::size_t>(data_.x.cols()); }
  std::size_t hidden() const { return cfg_.hidden; }
  std::size_t num_weights() const { return (inputs() + 1) * cfg_.hidden + cfg_.hidden + 1; }
  Eigen::Index log_alpha_index() const { return static_cast<Eigen::Index>(num_weights()); }
  Eigen::Index log_tau_index() const { return static_cast<Eigen::Index>(num_weights()) + 1; }

  /// Network outputs phi(x_n, w) for every data row.
  Vec predict(const Vec& z) const;

  /// Smallest |pre-activation| over all rows and hidden units; finite
  /// differences are only trustworthy when this is well above the step.
  double kink_margin(const Vec& z) const;

  const RegressionDataset& data() const { return data_; }

 private:
  friend class BnnPrepared;

  RegressionDataset data_;
  BnnConfig cfg_;
};

}  // namespace mcvi
