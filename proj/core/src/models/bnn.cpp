#include "mcvi/models/bnn.hpp"

#include <cmath>

namespace mcvi {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

using ConstMatMap = Eigen::Map<const Mat>;
using ConstVecMap = Eigen::Map<const Vec>;

struct Weights {
  ConstMatMap w1;
  ConstVecMap b1;
  ConstVecMap w2;
  double b2;
};

Weights unpack(const Vec& z, Eigen::Index p, Eigen::Index h) {
  const double* base = z.data();
  return Weights{ConstMatMap(base, p, h), ConstVecMap(base + p * h, h), ConstVecMap(base + p * h + h, h),
                 base[p * h + 2 * h]};
}

}  // namespace

class BnnPrepared final : public PreparedPoint {
 public:
  BnnPrepared(const BnnModel& model, const Vec& z) : model_(model), z_(z) {
    const auto& x = model.data_.x;
    const auto p = x.cols();
    const auto h = static_cast<Eigen::Index>(model.cfg_.hidden);
    const Weights w = unpack(z, p, h);

    pre_ = x * w.w1;
    pre_.rowwise() += w.b1.transpose();
    mask_ = (pre_.array() > 0.0).cast<double>().matrix();
    act_ = pre_.cwiseMax(0.0);
    const Vec phi = (act_ * w.w2).array() + w.b2;
    if (!phi.allFinite()) throw ModelError("bnn: non-finite activations");
    resid_ = model.data_.y - phi;

    alpha_ = std::exp(z[model.log_alpha_index()]);
    tau_ = std::exp(z[model.log_tau_index()]);
    delta_ = tau_ * resid_;

    // Likelihood gradient with respect to the weights, by backpropagation.
    lik_grad_w_.resize(static_cast<Eigen::Index>(model.num_weights()));
    const Mat dpre = mask_.cwiseProduct(delta_ * w.w2.transpose());
    Eigen::Map<Mat>(lik_grad_w_.data(), p, h) = x.transpose() * dpre;
    lik_grad_w_.segment(p * h, h) = dpre.colwise().sum().transpose();
    lik_grad_w_.segment(p * h + h, h) = act_.transpose() * delta_;
    lik_grad_w_[p * h + 2 * h] = delta_.sum();

    const auto nw = static_cast<Eigen::Index>(model.num_weights());
    const auto weights = z.head(nw);
    weight_sq_ = weights.squaredNorm();
    resid_sq_ = resid_.squaredNorm();
    const double n = static_cast<double>(resid_.size());
    const double a0 = model.cfg_.gamma_shape;
    const double b0 = model.cfg_.gamma_rate;

    grad_.resize(z.size());
    grad_.head(nw) = lik_grad_w_ - alpha_ * weights;
    grad_[model.log_alpha_index()] = 0.5 * static_cast<double>(nw) - 0.5 * alpha_ * weight_sq_ + a0 - b0 * alpha_;
    grad_[model.log_tau_index()] = 0.5 * n - 0.5 * tau_ * resid_sq_ + a0 - b0 * tau_;
    if (!grad_.allFinite()) throw ModelError("bnn: non-finite gradient");
  }

  const Vec& point() const override { return z_; }
  const Vec& gradient() const override { return grad_; }

  Vec hvp(const Vec& v) const override {
    if (v.size() != z_.size()) throw DimensionError("bnn hvp: direction has wrong length");
    const auto& x = model_.data_.x;
    const auto p = x.cols();
    const auto h = static_cast<Eigen::Index>(model_.cfg_.hidden);
    const auto nw = static_cast<Eigen::Index>(model_.num_weights());
    const Weights w = unpack(z_, p, h);
    const Weights dv = unpack(v, p, h);
    const double v_alpha = v[model_.log_alpha_index()];
    const double v_tau = v[model_.log_tau_index()];

    // Tangent (R-operator) forward sweep.
    Mat r_pre = x * dv.w1;
    r_pre.rowwise() += dv.b1.transpose();
    const Mat r_act = mask_.cwiseProduct(r_pre);
    const Vec r_phi = (act_ * dv.w2 + r_act * w.w2).array() + dv.b2;
    const Vec r_delta = -tau_ * r_phi;

    // Tangent of the backward sweep; ReLU'' = 0 drops the mask's own tangent.
    Vec out(z_.size());
    const Mat r_dpre = mask_.cwiseProduct(r_delta * w.w2.transpose() + delta_ * dv.w2.transpose());
    Eigen::Map<Mat>(out.data(), p, h) = x.transpose() * r_dpre;
    out.segment(p * h, h) = r_dpre.colwise().sum().transpose();
    out.segment(p * h + h, h) = act_.transpose() * r_delta + r_act.transpose() * delta_;
    out[p * h + 2 * h] = r_delta.sum();

    const auto weights = z_.head(nw);
    const auto v_w = v.head(nw);
    const double b0 = model_.cfg_.gamma_rate;
    out.head(nw) += -alpha_ * v_w - (alpha_ * v_alpha) * weights + v_tau * lik_grad_w_;
    out[model_.log_alpha_index()] = -alpha_ * weights.dot(v_w) + (-0.5 * alpha_ * weight_sq_ - b0 * alpha_) * v_alpha;
    out[model_.log_tau_index()] = lik_grad_w_.dot(v_w) + (-0.5 * tau_ * resid_sq_ - b0 * tau_) * v_tau;
    return out;
  }

  double min_abs_preactivation() const { return pre_.cwiseAbs().minCoeff(); }

 private:
  const BnnModel& model_;
  Vec z_;
  Mat pre_;   // N x H pre-activations
  Mat mask_;  // ReLU'(pre)
  Mat act_;   // ReLU(pre)
  Vec resid_;
  Vec delta_;  // tau * resid
  Vec lik_grad_w_;
  Vec grad_;
  double alpha_ = 0.0;
  double tau_ = 0.0;
  double weight_sq_ = 0.0;
  double resid_sq_ = 0.0;
};

BnnModel::BnnModel(RegressionDataset data, BnnConfig cfg) : data_(std::move(data)), cfg_(cfg) {
  if (data_.x.rows() < 1 || data_.x.cols() < 1) throw DataError("bnn: empty dataset");
  if (data_.y.size() != data_.x.rows()) throw DimensionError("bnn: X and y row counts differ");
  if (!data_.x.allFinite() || !data_.y.allFinite()) throw DataError("bnn: dataset has non-finite values");
  if (cfg_.hidden < 1) throw std::invalid_argument("bnn: need at least one hidden unit");
  if (!(cfg_.gamma_shape > 0.0) || !(cfg_.gamma_rate > 0.0)) throw std::invalid_argument("bnn: bad Gamma hyper-prior");
}

Vec BnnModel::predict(const Vec& z) const {
  check_point(z);
  const auto p = data_.x.cols();
  const auto h = static_cast<Eigen::Index>(cfg_.hidden);
  const Weights w = unpack(z, p, h);
  Mat pre = data_.x * w.w1;
  pre.rowwise() += w.b1.transpose();
  return (pre.cwiseMax(0.0) * w.w2).array() + w.b2;
}

double BnnModel::log_density(const Vec& z) const {
  const Vec phi = predict(z);
  if (!phi.allFinite()) throw ModelError("bnn: non-finite activations");
  const auto nw = static_cast<Eigen::Index>(num_weights());
  const double u_alpha = z[log_alpha_index()];
  const double u_tau = z[log_tau_index()];
  const double alpha = std::exp(u_alpha);
  const double tau = std::exp(u_tau);
  const double n = static_cast<double>(data_.y.size());
  const double a0 = cfg_.gamma_shape;
  const double b0 = cfg_.gamma_rate;

  const double lik = n * (0.5 * u_tau - kHalfLog2Pi) - 0.5 * tau * (data_.y - phi).squaredNorm();
  const double prior = static_cast<double>(nw) * (0.5 * u_alpha - kHalfLog2Pi) - 0.5 * alpha * z.head(nw).squaredNorm();
  // log Gamma(x; a0, b0) evaluated at x = exp(u), plus the log-Jacobian u.
  auto log_gamma_hyper = [&](double u, double x) {
    return a0 * std::log(b0) - std::lgamma(a0) + (a0 - 1.0) * u - b0 * x + u;
  };
  return lik + prior + log_gamma_hyper(u_alpha, alpha) + log_gamma_hyper(u_tau, tau);
}

Vec BnnModel::gradient(const Vec& z) const {
  check_point(z);
  return BnnPrepared(*this, z).gradient();
}

std::unique_ptr<PreparedPoint> BnnModel::prepare(const Vec& z) const {
  check_point(z);
  return std::make_unique<BnnPrepared>(*this, z);
}

Vec BnnModel::hessian_diag(const Vec& z) const {
  if (!has_hessian_diag()) return LogDensityModel::hessian_diag(z);
  return full_hessian(z).diagonal();
}

Mat BnnModel::full_hessian(const Vec& z) const {
  if (!has_full_hessian()) {
    throw CapabilityError("bnn: full Hessian is not provided for D = " + std::to_string(dim()) + " (limit " +
                          std::to_string(cfg_.dense_limit) + ")");
  }
  return hessian_from_hvp(*this, z);
}

double BnnModel::kink_margin(const Vec& z) const {
  check_point(z);
  return BnnPrepared(*this, z).min_abs_preactivation();
}

}  // namespace mcvi
