#pragma once

#include "mcvi/numerics.hpp"
#include "mcvi/rng.hpp"

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace mcvi {

/// Diagonal Gaussian q(z) = N(mean, diag(exp(log_scale))^2).
struct VarParams {
  Vec mean;
  Vec log_scale;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  Vec scale() const { return log_scale.array().exp(); }
  /// [mean; log_scale]
  Vec flat() const;
  static VarParams from_flat(const Vec& flat);
  void validate() const;

  friend bool operator==(const VarParams& a, const VarParams& b) {
    return a.mean == b.mean && a.log_scale == b.log_scale;
  }
};

inline const double kDefaultInitLogScale = std::log(0.1);

/// mean = init_mean, log_scale = init_log_scale in every coordinate.
VarParams initial_params(std::size_t dim, double init_mean = 0.0, double init_log_scale = kDefaultInitLogScale);

/// L independent standard-normal D-vectors. Sample l of iteration t is drawn
/// from stream (seed, {t, l, purpose}), so batches are reproducible and any
/// single sample can be regenerated in isolation.
struct NoiseBatch {
  std::vector<Vec> eps;
  std::uint64_t iteration = 0;
  std::uint64_t first_index = 0;

  std::size_t size() const { return eps.size(); }
};

NoiseBatch make_noise_batch(std::uint64_t seed, std::uint64_t iteration, std::size_t samples, std::size_t dim,
                            Purpose purpose = Purpose::kNoise);

/// z = mean + exp(log_scale) * eps
Vec transform(const Vec& eps, const VarParams& params);

double log_q(const Vec& z, const VarParams& params);

/// d ln q / dz at z = transform(eps): -eps / s.
Vec pathwise_score(const Vec& eps, const VarParams& params);

/// d ln q / d(mean) and d ln q / d(s) holding z fixed: (eps / s, (eps^2 - 1) / s).
/// The scale block is with respect to s itself, not log s.
std::pair<Vec, Vec> param_score(const Vec& eps, const VarParams& params);

}  // namespace mcvi
