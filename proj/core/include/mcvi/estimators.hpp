#pragma once

#include "mcvi/model.hpp"
#include "mcvi/vardist.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace mcvi {

/// Which gradient estimator to run.
///
///  - kMC: plain reparameterization gradient.
///  - kFullHessian: control variate from the dense Hessian at the mean.
///  - kHessianDiag: control variate with H replaced by its diagonal.
///  - kHvpLocal: Hessian-vector products for the samples, leave-one-out
///    estimate of diag(H) * s for the scale-block mean. Needs L >= 2.
///  - kHvpMeanOnly: Hessian-vector control variate on the mean block only;
///    the log-scale block is plain MC.
enum class EstimatorKind { kMC, kFullHessian, kHessianDiag, kHvpLocal, kHvpMeanOnly };

std::string to_string(EstimatorKind kind);
/// Accepts the short CLI names (mc, full, diag, hvplocal, hvpmean).
EstimatorKind parse_estimator_kind(std::string_view name);
std::vector<EstimatorKind> parse_estimator_kinds(std::string_view comma_separated);

/// Gradient of the ELBO with respect to (mean, log scale). The log-scale
/// block is chain-ruled: g_log_s = g_s * s.
struct GradEstimate {
  Vec mean;
  Vec log_scale;

  static GradEstimate zeros(std::size_t dim);
  static GradEstimate from_flat(const Vec& flat);
  /// [mean; log_scale]
  Vec flat() const;
  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  bool finite() const { return mean.allFinite() && log_scale.allFinite(); }

  GradEstimate& operator+=(const GradEstimate& other);
  GradEstimate& operator*=(double k);
  friend bool operator==(const GradEstimate& a, const GradEstimate& b) {
    return a.mean == b.mean && a.log_scale == b.log_scale;
  }
};

/// Diagonal control-variate coefficients over the flat [mean; log_scale]
/// layout.
struct ControlCoeff {
  Vec c;
  static ControlCoeff identity(std::size_t dim);
};

/// Throws CapabilityError if `model` cannot support `kind`, and
/// std::invalid_argument if the sample count is unsuitable.
void check_capability(const LogDensityModel& model, EstimatorKind kind, std::size_t samples);
bool supports(const LogDensityModel& model, EstimatorKind kind);

/// Single-sample reparameterization gradient at z = T(eps; params):
/// g_m = f(z), g_log_s = f(z) * eps * s + 1.
GradEstimate mc_rge(const LogDensityModel& model, const VarParams& params, const Vec& eps);
GradEstimate mc_rge_batch(const LogDensityModel& model, const VarParams& params, const NoiseBatch& noise);

/// Linearized gradient sample:
///   g~_m = f(m) + H(m)(s * eps)
///   g~_log_s = ((f(m) + H(m)(s * eps)) * eps + 1/s) * s
GradEstimate cv_sample(const Vec& grad_at_mean, const VarParams& params, const Vec& eps, const Vec& hvp_of_eps);

/// Mean over l != exclude of eps_l * hvp_l. Unbiased for diag(H) * s when
/// hvp_l = H (s * eps_l) and the eps_l are standard normal.
Vec loo_diag_estimate(const std::vector<Vec>& eps, const std::vector<Vec>& hvps, std::size_t exclude);

/// Everything the control variate needs for one batch, computed once at m.
struct CvBatch {
  EstimatorKind kind = EstimatorKind::kMC;
  Vec grad_at_mean;
  /// Per sample: H(m)(s * eps_l), or diag(H) * s * eps_l for kHessianDiag.
  std::vector<Vec> hvps;
  /// diag(H(m)); set for kFullHessian and kHessianDiag.
  Vec hessian_diag;
};

CvBatch prepare_cv_batch(const LogDensityModel& model, const VarParams& params, EstimatorKind kind,
                         const NoiseBatch& noise);

/// Per-sample control variates g~ for the batch (scale block is zero for kHvpMeanOnly).
std::vector<GradEstimate> cv_samples(const CvBatch& batch, const VarParams& params, const NoiseBatch& noise);

/// Per-sample control-variate means:
///   E[g~_m] = f(m), E[g~_log_s] = (diag(H) * s + 1/s) * s
/// with diag(H) * s replaced by the leave-one-out estimate for kHvpLocal.
std::vector<GradEstimate> cv_expectation(const CvBatch& batch, const VarParams& params, const NoiseBatch& noise);
std::vector<GradEstimate> cv_expectation(const LogDensityModel& model, const VarParams& params, EstimatorKind kind,
                                         const NoiseBatch& noise);

/// hat - C * (tilde - tilde_mean), blockwise over [mean; log_scale].
GradEstimate apply_cv(const GradEstimate& hat, const GradEstimate& tilde, const GradEstimate& tilde_mean,
                      const ControlCoeff& coeff);

/// Batch-mean estimator of the requested kind; kMC reduces to mc_rge_batch.
GradEstimate rv_rge_batch(const LogDensityModel& model, const VarParams& params, const NoiseBatch& noise,
                          EstimatorKind kind, const ControlCoeff& coeff);
GradEstimate rv_rge_batch(const LogDensityModel& model, const VarParams& params, const NoiseBatch& noise,
                          EstimatorKind kind);

/// Per-component c = Cov(hat, tilde) / Var(tilde) over paired samples;
/// components with Var(tilde) < 1e-14 get c = 0. Needs >= 10 pairs.
ControlCoeff estimate_control_coeff(const std::vector<Vec>& hat_samples, const std::vector<Vec>& tilde_samples);

}  // namespace mcvi
