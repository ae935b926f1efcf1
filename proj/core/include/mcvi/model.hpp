#pragma once

#include "mcvi/numerics.hpp"

#include <memory>
#include <stdexcept>
#include <string>

namespace mcvi {

/// The model produced a non-finite value or was evaluated outside its domain.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was requested that the model (or estimator) cannot provide.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Derivative state cached at a fixed point z0.
///
/// Every control-variate evaluation in a batch multiplies by H(z0) at the same
/// z0 = m, so models precompute the forward pass once and answer many
/// Hessian-vector products from it. Immutable once built.
class PreparedPoint {
 public:
  virtual ~PreparedPoint() = default;

  virtual const Vec& point() const = 0;
  /// Gradient of log p at point().
  virtual const Vec& gradient() const = 0;
  /// H(point()) * v.
  virtual Vec hvp(const Vec& v) const = 0;
};

/// A twice-differentiable log joint density ln p(z, D) over R^D.
///
/// Implementations are immutable after construction and must be callable from
/// several threads at once.
class LogDensityModel {
 public:
  virtual ~LogDensityModel() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;

  virtual double log_density(const Vec& z) const = 0;
  virtual Vec gradient(const Vec& z) const = 0;
  virtual std::unique_ptr<PreparedPoint> prepare(const Vec& z) const = 0;

  /// H(z) * v. Always routed through prepare() so the cached and uncached
  /// paths are the same computation.
  Vec hvp(const Vec& z, const Vec& v) const;

  virtual bool has_hessian_diag() const { return false; }
  virtual bool has_full_hessian() const { return false; }
  virtual Vec hessian_diag(const Vec& z) const;
  virtual Mat full_hessian(const Vec& z) const;

 protected:
  void check_point(const Vec& z) const;
};

/// Builds the dense Hessian column by column from hvp calls.
Mat hessian_from_hvp(const LogDensityModel& model, const Vec& z);

}  // namespace mcvi
