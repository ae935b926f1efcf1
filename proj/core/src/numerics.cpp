#include "mcvi/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace mcvi {

Vec mat_vec(const Mat& a, const Vec& x) {
  if (a.cols() != x.size()) {
    throw DimensionError("mat_vec: matrix has " + std::to_string(a.cols()) + " columns but vector has " +
                         std::to_string(x.size()) + " entries");
  }
  return a * x;
}

namespace {

void require_samples(const std::vector<Vec>& samples, const char* what) {
  if (samples.size() < 2) {
    throw SampleSizeError(std::string(what) + ": need at least 2 samples");
  }
  const auto n = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != n) throw DimensionError(std::string(what) + ": samples have unequal length");
  }
}

}  // namespace

Vec component_means(const std::vector<Vec>& samples) {
  if (samples.empty()) throw SampleSizeError("component_means: no samples");
  Vec mean = Vec::Zero(samples.front().size());
  for (const auto& s : samples) {
    if (s.size() != mean.size()) throw DimensionError("component_means: samples have unequal length");
    mean += s;
  }
  return mean / static_cast<double>(samples.size());
}

Vec component_variances(const std::vector<Vec>& samples) {
  require_samples(samples, "component_variances");
  const Vec mean = component_means(samples);
  Vec acc = Vec::Zero(mean.size());
  for (const auto& s : samples) acc += (s - mean).cwiseAbs2();
  return acc / static_cast<double>(samples.size() - 1);
}

double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) throw SampleSizeError("sample_variance: need at least 2 samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(xs.size() - 1);
}

double norm_variance(const std::vector<Vec>& samples) {
  require_samples(samples, "norm_variance");
  std::vector<double> norms;
  norms.reserve(samples.size());
  for (const auto& s : samples) norms.push_back(s.norm());
  return sample_variance(norms);
}

double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1.0});
  return std::abs(a - b) / scale;
}

double max_relative_error(const Vec& a, const Vec& b) {
  require_same_size(a, b, "max_relative_error");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, relative_error(a[i], b[i]));
  return worst;
}

double relative_norm_error(const Vec& a, const Vec& b) {
  require_same_size(a, b, "relative_norm_error");
  const double scale = std::max({a.norm(), b.norm(), 1.0});
  return (a - b).norm() / scale;
}

bool all_finite(const Vec& v) { return v.allFinite(); }

void require_same_size(const Vec& a, const Vec& b, const std::string& what) {
  if (a.size() != b.size()) {
    throw DimensionError(what + ": length " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

}  // namespace mcvi
