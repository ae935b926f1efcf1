#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace mcvi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when operand shapes disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a statistic is requested from too few samples.
class SampleSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Vec mat_vec(const Mat& a, const Vec& x);

/// Unbiased (n-1 denominator) per-component variance.
Vec component_variances(const std::vector<Vec>& samples);

/// Unbiased variance of the Euclidean norms of the samples.
double norm_variance(const std::vector<Vec>& samples);

/// Per-component sample mean.
Vec component_means(const std::vector<Vec>& samples);

/// Unbiased variance of a scalar sample.
double sample_variance(const std::vector<double>& xs);

/// |a-b| / max(|a|, |b|, 1).
double relative_error(double a, double b);

/// Componentwise maximum of relative_error.
double max_relative_error(const Vec& a, const Vec& b);

/// ||a-b|| / max(||a||, ||b||, 1).
double relative_norm_error(const Vec& a, const Vec& b);

bool all_finite(const Vec& v);

void require_same_size(const Vec& a, const Vec& b, const std::string& what);

}  // namespace mcvi
