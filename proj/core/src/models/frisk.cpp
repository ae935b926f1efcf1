#include "mcvi/models/frisk.hpp"

#include <cmath>
#include <numbers>

namespace mcvi {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)
}

class FriskPrepared final : public PreparedPoint {
 public:
  FriskPrepared(const FriskModel& model, const Vec& z)
      : model_(model), z_(z), rates_(model.rates(z)), grad_(model.gradient(z)) {
    inv_var_alpha_ = std::exp(-z[FriskModel::kLogVarAlpha]);
    inv_var_beta_ = std::exp(-z[FriskModel::kLogVarBeta]);
    alpha_ = z.segment(3, model.ethnicities_);
    beta_ = z.segment(3 + model.ethnicities_, model.precincts_);
    curv_alpha_ = 0.5 * alpha_.squaredNorm() * inv_var_alpha_ + 1.0 / model.prior_var_;
    curv_beta_ = 0.5 * beta_.squaredNorm() * inv_var_beta_ + 1.0 / model.prior_var_;
  }

  const Vec& point() const override { return z_; }
  const Vec& gradient() const override { return grad_; }

  Vec hvp(const Vec& v) const override {
    const int ne = model_.ethnicities_;
    const int np = model_.precincts_;
    if (v.size() != z_.size()) throw DimensionError("frisk hvp: direction has wrong length");
    const double v_mu = v[FriskModel::kMu];
    const double v_la = v[FriskModel::kLogVarAlpha];
    const double v_lb = v[FriskModel::kLogVarBeta];
    const auto v_alpha = v.segment(3, ne);
    const auto v_beta = v.segment(3 + ne, np);

    // Tangent of eta along v, weighted by the Poisson curvature.
    Mat w = rates_.array() * ((v_alpha.replicate(1, np).array() + v_beta.transpose().replicate(ne, 1).array()) + v_mu);

    Vec out(z_.size());
    out[FriskModel::kMu] = -w.sum() - v_mu / model_.prior_var_;
    out[FriskModel::kLogVarAlpha] = -curv_alpha_ * v_la + inv_var_alpha_ * alpha_.dot(v_alpha);
    out[FriskModel::kLogVarBeta] = -curv_beta_ * v_lb + inv_var_beta_ * beta_.dot(v_beta);
    out.segment(3, ne) = -w.rowwise().sum() - inv_var_alpha_ * v_alpha + (inv_var_alpha_ * v_la) * alpha_;
    out.segment(3 + ne, np) =
        -w.colwise().sum().transpose() - inv_var_beta_ * v_beta + (inv_var_beta_ * v_lb) * beta_;
    return out;
  }

 private:
  const FriskModel& model_;
  Vec z_;
  Mat rates_;
  Vec grad_;
  Vec alpha_;
  Vec beta_;
  double inv_var_alpha_ = 0.0;
  double inv_var_beta_ = 0.0;
  double curv_alpha_ = 0.0;
  double curv_beta_ = 0.0;
};

FriskModel::FriskModel(FriskDataset data, double prior_scale)
    : data_(std::move(data)),
      ethnicities_(data_.ethnicities),
      precincts_(data_.precincts),
      prior_var_(prior_scale * prior_scale) {
  data_.validate();
  if (!(prior_scale > 0.0)) throw std::invalid_argument("frisk model: prior scale must be positive");
  counts_.resize(ethnicities_, precincts_);
  log_exposure_.resize(ethnicities_, precincts_);
  for (int e = 0; e < ethnicities_; ++e) {
    for (int p = 0; p < precincts_; ++p) {
      const auto y = static_cast<double>(data_.stop(e, p));
      counts_(e, p) = y;
      log_exposure_(e, p) = std::log(static_cast<double>(data_.arrest(e, p)));
      log_factorial_sum_ += std::lgamma(y + 1.0);
    }
  }
}

Mat FriskModel::rates(const Vec& z) const {
  check_point(z);
  const auto alpha = z.segment(3, ethnicities_);
  const auto beta = z.segment(3 + ethnicities_, precincts_);
  Mat eta = log_exposure_;
  eta.array() += z[kMu];
  eta.colwise() += alpha;
  eta.rowwise() += beta.transpose();
  Mat r = eta.array().exp().matrix();
  if (!r.allFinite()) throw ModelError("frisk: Poisson rate overflow");
  return r;
}

double FriskModel::log_density(const Vec& z) const {
  check_point(z);
  const auto alpha = z.segment(3, ethnicities_);
  const auto beta = z.segment(3 + ethnicities_, precincts_);
  Mat eta = log_exposure_;
  eta.array() += z[kMu];
  eta.colwise() += alpha;
  eta.rowwise() += beta.transpose();
  const Mat r = eta.array().exp().matrix();
  if (!r.allFinite()) throw ModelError("frisk: Poisson rate overflow");

  double lp = (counts_.array() * eta.array() - r.array()).sum() - log_factorial_sum_;

  const double hyper_norm = -kHalfLog2Pi - 0.5 * std::log(prior_var_);
  for (Eigen::Index i : {kMu, kLogVarAlpha, kLogVarBeta}) lp += hyper_norm - 0.5 * z[i] * z[i] / prior_var_;

  const double la = z[kLogVarAlpha];
  const double lb = z[kLogVarBeta];
  lp += ethnicities_ * (-kHalfLog2Pi - 0.5 * la) - 0.5 * alpha.squaredNorm() * std::exp(-la);
  lp += precincts_ * (-kHalfLog2Pi - 0.5 * lb) - 0.5 * beta.squaredNorm() * std::exp(-lb);
  return lp;
}

Vec FriskModel::gradient(const Vec& z) const {
  const Mat resid = counts_ - rates(z);
  const auto alpha = z.segment(3, ethnicities_);
  const auto beta = z.segment(3 + ethnicities_, precincts_);
  const double inv_a = std::exp(-z[kLogVarAlpha]);
  const double inv_b = std::exp(-z[kLogVarBeta]);

  Vec g(z.size());
  g[kMu] = resid.sum() - z[kMu] / prior_var_;
  g[kLogVarAlpha] = -0.5 * ethnicities_ + 0.5 * alpha.squaredNorm() * inv_a - z[kLogVarAlpha] / prior_var_;
  g[kLogVarBeta] = -0.5 * precincts_ + 0.5 * beta.squaredNorm() * inv_b - z[kLogVarBeta] / prior_var_;
  g.segment(3, ethnicities_) = resid.rowwise().sum() - inv_a * alpha;
  g.segment(3 + ethnicities_, precincts_) = resid.colwise().sum().transpose() - inv_b * beta;
  return g;
}

std::unique_ptr<PreparedPoint> FriskModel::prepare(const Vec& z) const {
  check_point(z);
  return std::make_unique<FriskPrepared>(*this, z);
}

Vec FriskModel::hessian_diag(const Vec& z) const {
  const Mat r = rates(z);
  const auto alpha = z.segment(3, ethnicities_);
  const auto beta = z.segment(3 + ethnicities_, precincts_);
  const double inv_a = std::exp(-z[kLogVarAlpha]);
  const double inv_b = std::exp(-z[kLogVarBeta]);

  Vec d(z.size());
  d[kMu] = -r.sum() - 1.0 / prior_var_;
  d[kLogVarAlpha] = -0.5 * alpha.squaredNorm() * inv_a - 1.0 / prior_var_;
  d[kLogVarBeta] = -0.5 * beta.squaredNorm() * inv_b - 1.0 / prior_var_;
  d.segment(3, ethnicities_) = -r.rowwise().sum().array() - inv_a;
  d.segment(3 + ethnicities_, precincts_) = -r.colwise().sum().transpose().array() - inv_b;
  return d;
}

Mat FriskModel::full_hessian(const Vec& z) const {
  const Mat r = rates(z);
  const auto n = z.size();
  const double inv_a = std::exp(-z[kLogVarAlpha]);
  const double inv_b = std::exp(-z[kLogVarBeta]);

  Mat h = Mat::Zero(n, n);
  h.diagonal() = hessian_diag(z);
  for (int e = 0; e < ethnicities_; ++e) {
    const auto ie = alpha_index(e);
    h(kMu, ie) = h(ie, kMu) = -r.row(e).sum();
    h(kLogVarAlpha, ie) = h(ie, kLogVarAlpha) = z[ie] * inv_a;
    for (int p = 0; p < precincts_; ++p) {
      const auto ip = beta_index(p);
      h(ie, ip) = h(ip, ie) = -r(e, p);
    }
  }
  for (int p = 0; p < precincts_; ++p) {
    const auto ip = beta_index(p);
    h(kMu, ip) = h(ip, kMu) = -r.col(p).sum();
    h(kLogVarBeta, ip) = h(ip, kLogVarBeta) = z[ip] * inv_b;
  }
  return h;
}

}  // namespace mcvi
