#include "mcvi/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace mcvi {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kMC: return "mc";
    case EstimatorKind::kFullHessian: return "full";
    case EstimatorKind::kHessianDiag: return "diag";
    case EstimatorKind::kHvpLocal: return "hvplocal";
    case EstimatorKind::kHvpMeanOnly: return "hvpmean";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  std::string key;
  for (char ch : name) {
    if (ch == '-' || ch == '_' || ch == '+' || ch == ' ') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (key == "mc") return EstimatorKind::kMC;
  if (key == "full" || key == "fullhessian") return EstimatorKind::kFullHessian;
  if (key == "diag" || key == "hessiandiag" || key == "hessiandiagonal") return EstimatorKind::kHessianDiag;
  if (key == "hvplocal") return EstimatorKind::kHvpLocal;
  if (key == "hvpmean" || key == "hvpmeanonly") return EstimatorKind::kHvpMeanOnly;
  throw std::invalid_argument("unknown estimator kind '" + std::string(name) + "'");
}

std::vector<EstimatorKind> parse_estimator_kinds(std::string_view comma_separated) {
  std::vector<EstimatorKind> kinds;
  std::istringstream in{std::string(comma_separated)};
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto kind = parse_estimator_kind(item);
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) kinds.push_back(kind);
  }
  if (kinds.empty()) throw std::invalid_argument("no estimator kinds given");
  return kinds;
}

GradEstimate GradEstimate::zeros(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {Vec::Zero(d), Vec::Zero(d)};
}

GradEstimate GradEstimate::from_flat(const Vec& flat) {
  if (flat.size() % 2 != 0) throw DimensionError("GradEstimate::from_flat: odd length");
  const auto d = flat.size() / 2;
  return {flat.head(d), flat.tail(d)};
}

Vec GradEstimate::flat() const {
  Vec out(mean.size() + log_scale.size());
  out << mean, log_scale;
  return out;
}

GradEstimate& GradEstimate::operator+=(const GradEstimate& other) {
  mean += other.mean;
  log_scale += other.log_scale;
  return *this;
}

GradEstimate& GradEstimate::operator*=(double k) {
  mean *= k;
  log_scale *= k;
  return *this;
}

ControlCoeff ControlCoeff::identity(std::size_t dim) { return {Vec::Ones(static_cast<Eigen::Index>(2 * dim))}; }

bool supports(const LogDensityModel& model, EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kFullHessian: return model.has_full_hessian();
    case EstimatorKind::kHessianDiag: return model.has_hessian_diag();
    default: return true;
  }
}

void check_capability(const LogDensityModel& model, EstimatorKind kind, std::size_t samples) {
  if (samples < 1) throw std::invalid_argument("estimator needs at least one sample");
  if (!supports(model, kind)) {
    throw CapabilityError("estimator '" + to_string(kind) + "' needs a " +
                          (kind == EstimatorKind::kFullHessian ? "full Hessian" : "Hessian diagonal") +
                          ", which model '" + model.name() + "' (D=" + std::to_string(model.dim()) +
                          ") does not provide");
  }
  if (kind == EstimatorKind::kHvpLocal && samples < 2) {
    throw std::invalid_argument("estimator 'hvplocal' needs L >= 2 for its leave-one-out diagonal; use 'hvpmean' for L = 1");
  }
}

GradEstimate mc_rge(const LogDensityModel& model, const VarParams& params, const Vec& eps) {
  const Vec s = params.scale();
  const Vec z = transform(eps, params);
  Vec f = model.gradient(z);
  if (!f.allFinite()) throw ModelError(model.name() + ": non-finite gradient in mc_rge");
  // Pathwise and parameter scores cancel in the mean block; in the scale
  // block they leave 1/s, which becomes 1 after the chain rule to log s.
  Vec g_log_s = (f.array() * eps.array() * s.array() + 1.0).matrix();
  return {std::move(f), std::move(g_log_s)};
}

GradEstimate mc_rge_batch(const LogDensityModel& model, const VarParams& params, const NoiseBatch& noise) {
  if (noise.size() == 0) throw std::invalid_argument("mc_rge_batch: empty noise batch");
  GradEstimate total = GradEstimate::zeros(params.dim());
  for (const auto& eps : noise.eps) total += mc_rge(model, params, eps);
  total *= 1.0 / static_cast<double>(noise.size());
  return total;
}

GradEstimate cv_sample(const Vec& grad_at_mean, const VarParams& params, const Vec& eps, const Vec& hvp_of_eps) {
  require_same_size(grad_at_mean, eps, "cv_sample");
  require_same_size(hvp_of_eps, eps, "cv_sample");
  const Eigen::ArrayXd s = params.scale().array();
  Vec f_lin = grad_at_mean + hvp_of_eps;
  Vec g_log_s = ((f_lin.array() * eps.array() + 1.0 / s) * s).matrix();
  return {std::move(f_lin), std::move(g_log_s)};
}

Vec loo_diag_estimate(const std::vector<Vec>& eps, const std::vector<Vec>& hvps, std::size_t exclude) {
  if (eps.size() < 2) throw std::invalid_argument("loo_diag_estimate: need at least 2 samples");
  if (hvps.size() != eps.size()) throw DimensionError("loo_diag_estimate: eps and hvp batches differ in size");
  if (exclude >= eps.size()) throw std::out_of_range("loo_diag_estimate: exclude index out of range");
  Vec acc = Vec::Zero(eps.front().size());
  for (std::size_t l = 0; l < eps.size(); ++l) {
    if (l == exclude) continue;
    require_same_size(eps[l], hvps[l], "loo_diag_estimate");
    acc.array() += eps[l].array() * hvps[l].array();
  }
  return acc / static_cast<double>(eps.size() - 1);
}

CvBatch prepare_cv_batch(const LogDensityModel& model, const VarParams& params, EstimatorKind kind,
                         const NoiseBatch& noise) {
  check_capability(model, kind, noise.size());
  CvBatch batch;
  batch.kind = kind;
  if (kind == EstimatorKind::kMC) return batch;

  const Vec s = params.scale();
  const auto prepared = model.prepare(params.mean);
  batch.grad_at_mean = prepared->gradient();
  batch.hvps.reserve(noise.size());

  switch (kind) {
    case EstimatorKind::kFullHessian: {
      const Mat h = model.full_hessian(params.mean);
      batch.hessian_diag = h.diagonal();
      for (const auto& eps : noise.eps) batch.hvps.push_back(h * (s.array() * eps.array()).matrix());
      break;
    }
    case EstimatorKind::kHessianDiag: {
      batch.hessian_diag = model.hessian_diag(params.mean);
      for (const auto& eps : noise.eps) {
        batch.hvps.push_back((batch.hessian_diag.array() * s.array() * eps.array()).matrix());
      }
      break;
    }
    case EstimatorKind::kHvpLocal:
    case EstimatorKind::kHvpMeanOnly:
      for (const auto& eps : noise.eps) batch.hvps.push_back(prepared->hvp((s.array() * eps.array()).matrix()));
      break;
    case EstimatorKind::kMC: break;
  }
  for (const auto& hv : batch.hvps) {
    if (!hv.allFinite()) throw ModelError(model.name() + ": non-finite Hessian-vector product");
  }
  return batch;
}

std::vector<GradEstimate> cv_samples(const CvBatch& batch, const VarParams& params, const NoiseBatch& noise) {
  std::vector<GradEstimate> out;
  if (batch.kind == EstimatorKind::kMC) return out;
  out.reserve(noise.size());
  for (std::size_t l = 0; l < noise.size(); ++l) {
    auto tilde = cv_sample(batch.grad_at_mean, params, noise.eps[l], batch.hvps[l]);
    if (batch.kind == EstimatorKind::kHvpMeanOnly) tilde.log_scale.setZero();
    out.push_back(std::move(tilde));
  }
  return out;
}

std::vector<GradEstimate> cv_expectation(const CvBatch& batch, const VarParams& params, const NoiseBatch& noise) {
  std::vector<GradEstimate> out;
  if (batch.kind == EstimatorKind::kMC) return out;
  const Eigen::ArrayXd s = params.scale().array();
  out.reserve(noise.size());
  auto scale_mean = [&](const Vec& scaled_diag) { return ((scaled_diag.array() + 1.0 / s) * s).matrix().eval(); };

  switch (batch.kind) {
    case EstimatorKind::kFullHessian:
    case EstimatorKind::kHessianDiag: {
      const GradEstimate shared{batch.grad_at_mean, scale_mean((batch.hessian_diag.array() * s).matrix())};
      out.assign(noise.size(), shared);
      break;
    }
    case EstimatorKind::kHvpLocal:
      for (std::size_t l = 0; l < noise.size(); ++l) {
        out.push_back({batch.grad_at_mean, scale_mean(loo_diag_estimate(noise.eps, batch.hvps, l))});
      }
      break;
    case EstimatorKind::kHvpMeanOnly:
      out.assign(noise.size(), GradEstimate{batch.grad_at_mean, Vec::Zero(batch.grad_at_mean.size())});
      break;
    case EstimatorKind::kMC: break;
  }
  return out;
}

std::vector<GradEstimate> cv_expectation(const LogDensityModel& model, const VarParams& params, EstimatorKind kind,
                                         const NoiseBatch& noise) {
  return cv_expectation(prepare_cv_batch(model, params, kind, noise), params, noise);
}

GradEstimate apply_cv(const GradEstimate& hat, const GradEstimate& tilde, const GradEstimate& tilde_mean,
                      const ControlCoeff& coeff) {
  const auto d = hat.mean.size();
  require_same_size(hat.mean, tilde.mean, "apply_cv");
  require_same_size(hat.mean, tilde_mean.mean, "apply_cv");
  if (coeff.c.size() != 2 * d) throw DimensionError("apply_cv: coefficient vector must have length 2D");
  GradEstimate out = hat;
  out.mean.array() -= coeff.c.head(d).array() * (tilde.mean - tilde_mean.mean).array();
  out.log_scale.array() -= coeff.c.tail(d).array() * (tilde.log_scale - tilde_mean.log_scale).array();
  return out;
}

GradEstimate rv_rge_batch(const LogDensityModel& model, const VarParams& params, const NoiseBatch& noise,
                          EstimatorKind kind, const ControlCoeff& coeff) {
  if (kind == EstimatorKind::kMC) {
    check_capability(model, kind, noise.size());
    return mc_rge_batch(model, params, noise);
  }
  const CvBatch batch = prepare_cv_batch(model, params, kind, noise);
  const auto tildes = cv_samples(batch, params, noise);
  const auto means = cv_expectation(batch, params, noise);

  GradEstimate total = GradEstimate::zeros(params.dim());
  for (std::size_t l = 0; l < noise.size(); ++l) {
    total += apply_cv(mc_rge(model, params, noise.eps[l]), tildes[l], means[l], coeff);
  }
  total *= 1.0 / static_cast<double>(noise.size());
  return total;
}

GradEstimate rv_rge_batch(const LogDensityModel& model, const VarParams& params, const NoiseBatch& noise,
                          EstimatorKind kind) {
  return rv_rge_batch(model, params, noise, kind, ControlCoeff::identity(params.dim()));
}

ControlCoeff estimate_control_coeff(const std::vector<Vec>& hat_samples, const std::vector<Vec>& tilde_samples) {
  if (hat_samples.size() != tilde_samples.size()) throw DimensionError("estimate_control_coeff: unpaired samples");
  if (hat_samples.size() < 10) throw SampleSizeError("estimate_control_coeff: need at least 10 paired samples");
  const Vec hat_mean = component_means(hat_samples);
  const Vec tilde_mean = component_means(tilde_samples);
  Vec cov = Vec::Zero(hat_mean.size());
  Vec var = Vec::Zero(hat_mean.size());
  for (std::size_t i = 0; i < hat_samples.size(); ++i) {
    require_same_size(hat_samples[i], hat_mean, "estimate_control_coeff");
    require_same_size(tilde_samples[i], hat_mean, "estimate_control_coeff");
    const Eigen::ArrayXd dt = (tilde_samples[i] - tilde_mean).array();
    cov.array() += (hat_samples[i] - hat_mean).array() * dt;
    var.array() += dt.square();
  }
  const double denom = static_cast<double>(hat_samples.size() - 1);
  cov /= denom;
  var /= denom;
  Vec c(cov.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) c[j] = var[j] < 1e-14 ? 0.0 : cov[j] / var[j];
  return {std::move(c)};
}

}  // namespace mcvi
