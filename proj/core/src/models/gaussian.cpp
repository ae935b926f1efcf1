#include "mcvi/models/gaussian.hpp"

#include "mcvi/rng.hpp"

#include <cmath>
#include <numbers>

namespace mcvi {

namespace {

class GaussianPrepared final : public PreparedPoint {
 public:
  GaussianPrepared(const GaussianModel& model, const Vec& z) : model_(model), z_(z), grad_(model.gradient(z)) {}
  const Vec& point() const override { return z_; }
  const Vec& gradient() const override { return grad_; }
  Vec hvp(const Vec& v) const override { return -(model_.precision() * v); }

 private:
  const GaussianModel& model_;
  Vec z_;
  Vec grad_;
};

}  // namespace

GaussianModel::GaussianModel(Vec mean, Mat precision) : mean_(std::move(mean)), precision_(std::move(precision)) {
  const auto d = mean_.size();
  if (d == 0) throw std::invalid_argument("gaussian model: dimension must be positive");
  if (precision_.rows() != d || precision_.cols() != d) {
    throw DimensionError("gaussian model: precision must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (!mean_.allFinite() || !precision_.allFinite()) {
    throw std::invalid_argument("gaussian model: non-finite parameters");
  }
  const double scale = std::max(precision_.cwiseAbs().maxCoeff(), 1.0);
  if ((precision_ - precision_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("gaussian model: precision is not symmetric");
  }
  Eigen::LLT<Mat> llt(precision_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("gaussian model: precision is not positive definite");
  }
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  log_normalizer_ = 0.5 * log_det - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
}

double GaussianModel::log_density(const Vec& z) const {
  check_point(z);
  const Vec r = z - mean_;
  return -0.5 * r.dot(precision_ * r) + log_normalizer_;
}

Vec GaussianModel::gradient(const Vec& z) const {
  check_point(z);
  return -(precision_ * (z - mean_));
}

std::unique_ptr<PreparedPoint> GaussianModel::prepare(const Vec& z) const {
  check_point(z);
  return std::make_unique<GaussianPrepared>(*this, z);
}

Vec GaussianModel::hessian_diag(const Vec& z) const {
  check_point(z);
  return -precision_.diagonal();
}

Mat GaussianModel::full_hessian(const Vec& z) const {
  check_point(z);
  return -precision_;
}

Vec GaussianModel::marginal_sd() const {
  const Mat cov = precision_.llt().solve(Mat::Identity(precision_.rows(), precision_.cols()));
  return cov.diagonal().cwiseSqrt();
}

GaussianModel random_gaussian_model(std::size_t dim, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(dim);
  RngStream rng(seed, {0, 0, Purpose::kData});
  Mat a(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) a(i, j) = rng.normal();
  Mat precision = a * a.transpose() / static_cast<double>(d) + Mat::Identity(d, d);
  precision = 0.5 * (precision + precision.transpose());
  Vec mean(d);
  for (Eigen::Index i = 0; i < d; ++i) mean[i] = rng.normal();
  return GaussianModel(std::move(mean), std::move(precision));
}

}  // namespace mcvi
