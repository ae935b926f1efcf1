#include "mcvi/vardist.hpp"

#include <numbers>

namespace mcvi {

Vec VarParams::flat() const {
  Vec out(mean.size() + log_scale.size());
  out << mean, log_scale;
  return out;
}

VarParams VarParams::from_flat(const Vec& flat) {
  if (flat.size() % 2 != 0) throw DimensionError("VarParams::from_flat: odd length");
  const auto d = flat.size() / 2;
  return VarParams{flat.head(d), flat.tail(d)};
}

void VarParams::validate() const {
  require_same_size(mean, log_scale, "VarParams");
  if (mean.size() == 0) throw DimensionError("VarParams: empty");
  if (!mean.allFinite() || !log_scale.allFinite()) throw std::invalid_argument("VarParams: non-finite entries");
}

VarParams initial_params(std::size_t dim, double init_mean, double init_log_scale) {
  const auto d = static_cast<Eigen::Index>(dim);
  return VarParams{Vec::Constant(d, init_mean), Vec::Constant(d, init_log_scale)};
}

NoiseBatch make_noise_batch(std::uint64_t seed, std::uint64_t iteration, std::size_t samples, std::size_t dim,
                            Purpose purpose) {
  if (samples < 1) throw std::invalid_argument("make_noise_batch: need at least one sample");
  NoiseBatch batch;
  batch.iteration = iteration;
  batch.eps.reserve(samples);
  for (std::size_t l = 0; l < samples; ++l) {
    batch.eps.push_back(normal_draws(RngStream(seed, {iteration, l, purpose}), dim));
  }
  return batch;
}

Vec transform(const Vec& eps, const VarParams& params) {
  require_same_size(eps, params.mean, "transform");
  require_same_size(eps, params.log_scale, "transform");
  return params.mean.array() + params.log_scale.array().exp() * eps.array();
}

double log_q(const Vec& z, const VarParams& params) {
  require_same_size(z, params.mean, "log_q");
  const Vec std_resid = (z - params.mean).array() * (-params.log_scale.array()).exp();
  const double d = static_cast<double>(z.size());
  return -0.5 * std_resid.squaredNorm() - params.log_scale.sum() - 0.5 * d * std::log(2.0 * std::numbers::pi);
}

Vec pathwise_score(const Vec& eps, const VarParams& params) {
  require_same_size(eps, params.log_scale, "pathwise_score");
  return -eps.array() * (-params.log_scale.array()).exp();
}

std::pair<Vec, Vec> param_score(const Vec& eps, const VarParams& params) {
  require_same_size(eps, params.log_scale, "param_score");
  const Eigen::ArrayXd inv_s = (-params.log_scale.array()).exp();
  Vec mean_block = eps.array() * inv_s;
  Vec scale_block = (eps.array().square() - 1.0) * inv_s;
  return {std::move(mean_block), std::move(scale_block)};
}

}  // namespace mcvi
