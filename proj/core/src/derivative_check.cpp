#include "mcvi/derivative_check.hpp"

#include "mcvi/models/bnn.hpp"
#include "mcvi/numerics.hpp"
#include "mcvi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mcvi {

namespace {

// How far a pre-activation can move per unit step along a unit direction.
double bnn_kink_threshold(const BnnModel& bnn, double h) {
  const double max_row = bnn.data().x.rowwise().norm().maxCoeff();
  return 10.0 * h * (max_row + 1.0);
}

Vec unit_direction(RngStream stream, std::size_t dim) {
  Vec v = normal_draws(stream, dim);
  return v / v.norm();
}

}  // namespace

DerivativeCheckResult check_derivatives(const LogDensityModel& model, const DerivativeCheckConfig& cfg) {
  DerivativeCheckResult res;
  res.model = model.name();
  res.dim = model.dim();
  const std::size_t d = model.dim();
  const auto* bnn = dynamic_cast<const BnnModel*>(&model);
  const double kink = bnn ? bnn_kink_threshold(*bnn, cfg.fd.step) : 0.0;

  auto fail = [&](std::size_t point, const std::string& what, double err, double tol) {
    std::ostringstream msg;
    msg << "point " << point << ": " << what << " error " << err << " > " << tol;
    res.failures.push_back(msg.str());
  };

  for (std::size_t p = 0; p < cfg.points; ++p) {
    Vec z;
    std::size_t tries = 0;
    for (;; ++tries) {
      if (tries >= cfg.max_tries) throw ModelError("could not find a kink-free point for the derivative check");
      z = cfg.point_scale * normal_draws(RngStream(cfg.seed, {p, tries, Purpose::kTest}), d);
      if (!bnn || bnn->kink_margin(z) > kink) break;
    }
    const Vec u = unit_direction(RngStream(cfg.seed, {p, tries, Purpose::kNoise}), d);
    const Vec w = unit_direction(RngStream(cfg.seed, {p, tries, Purpose::kShuffle}), d);

    const Vec grad = model.gradient(z);
    const double ge = max_relative_error(grad, fd_grad_oracle(model, z, cfg.fd));
    res.max_grad_err = std::max(res.max_grad_err, ge);
    if (!(ge <= cfg.grad_tol)) fail(p, "gradient", ge, cfg.grad_tol);

    const auto prepared = model.prepare(z);
    const Vec hu = prepared->hvp(u);
    const Vec hw = prepared->hvp(w);
    const double he = relative_norm_error(hu, fd_hvp_oracle(model, z, u, cfg.fd));
    res.max_hvp_err = std::max(res.max_hvp_err, he);
    if (!(he <= cfg.hvp_tol)) fail(p, "hvp", he, cfg.hvp_tol);

    const double se = relative_error(w.dot(hu), u.dot(hw));
    res.max_symmetry_err = std::max(res.max_symmetry_err, se);
    if (!(se <= cfg.symmetry_tol)) fail(p, "hvp symmetry", se, cfg.symmetry_tol);

    if (model.has_full_hessian()) {
      const Mat h = model.full_hessian(z);
      double de = max_relative_error(mat_vec(h, u), hu);
      de = std::max(de, max_relative_error(Vec(h.diagonal()), model.hessian_diag(z)));
      de = std::max(de, (h - h.transpose()).cwiseAbs().maxCoeff() / std::max(1.0, h.cwiseAbs().maxCoeff()));
      res.max_dense_err = std::max(res.max_dense_err, de);
      if (!(de <= cfg.dense_tol)) fail(p, "dense Hessian consistency", de, cfg.dense_tol);
    }
    ++res.points;
  }
  res.passed = res.failures.empty();
  return res;
}

}  // namespace mcvi
