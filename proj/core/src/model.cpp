#include "mcvi/model.hpp"

namespace mcvi {

Vec LogDensityModel::hvp(const Vec& z, const Vec& v) const {
  check_point(z);
  require_same_size(z, v, name() + " hvp");
  return prepare(z)->hvp(v);
}

Vec LogDensityModel::hessian_diag(const Vec&) const {
  throw CapabilityError(name() + " does not provide a Hessian diagonal");
}

Mat LogDensityModel::full_hessian(const Vec&) const {
  throw CapabilityError(name() + " does not provide a full Hessian");
}

void LogDensityModel::check_point(const Vec& z) const {
  if (static_cast<std::size_t>(z.size()) != dim()) {
    throw DimensionError(name() + ": expected a point of dimension " + std::to_string(dim()) + ", got " +
                         std::to_string(z.size()));
  }
}

Mat hessian_from_hvp(const LogDensityModel& model, const Vec& z) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  const auto prepared = model.prepare(z);
  Mat h(d, d);
  Vec basis = Vec::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    basis[j] = 1.0;
    h.col(j) = prepared->hvp(basis);
    basis[j] = 0.0;
  }
  return h;
}

}  // namespace mcvi
