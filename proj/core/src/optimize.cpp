#include "mcvi/optimize.hpp"

#include "mcvi/parallel.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace mcvi {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

AdamState AdamState::init(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(2 * dim);
  return {Vec::Zero(n), Vec::Zero(n), 0};
}

namespace {

void require_finite_grad(const GradEstimate& grad) {
  if (!grad.finite()) throw std::invalid_argument("optimizer step: non-finite gradient");
}

}  // namespace

VarParams sgd_step(const VarParams& params, const GradEstimate& grad, double step) {
  require_finite_grad(grad);
  require_same_size(params.mean, grad.mean, "sgd_step");
  return VarParams{params.mean + step * grad.mean, params.log_scale + step * grad.log_scale};
}

std::pair<AdamState, VarParams> adam_step(const AdamState& state, const VarParams& params, const GradEstimate& grad,
                                          const AdamHyper& hyper) {
  require_finite_grad(grad);
  const Vec g = grad.flat();
  if (state.first.size() != g.size()) throw DimensionError("adam_step: state does not match gradient");
  AdamState next = state;
  next.t += 1;
  next.first = hyper.beta1 * state.first + (1.0 - hyper.beta1) * g;
  next.second = hyper.beta2 * state.second + (1.0 - hyper.beta2) * g.cwiseAbs2();
  const double t = static_cast<double>(next.t);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  const Eigen::ArrayXd update =
      hyper.step * (next.first.array() / c1) / ((next.second.array() / c2).sqrt() + hyper.epsilon);
  Vec flat = params.flat();
  flat.array() += update;
  return {std::move(next), VarParams::from_flat(flat)};
}

double estimate_elbo(const LogDensityModel& model, const VarParams& params, std::size_t samples, std::uint64_t seed,
                     std::uint64_t eval_index, unsigned threads) {
  if (samples < 1) throw std::invalid_argument("estimate_elbo: need at least one sample");
  constexpr std::size_t kBlock = 250;
  const std::size_t blocks = (samples + kBlock - 1) / kBlock;
  const std::size_t dim = params.dim();
  std::vector<double> values(samples);
  parallel_for(blocks, threads, [&](std::size_t b) {
    RngStream rng(seed, {eval_index, b, Purpose::kElbo});
    const std::size_t end = std::min(samples, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      Vec eps(static_cast<Eigen::Index>(dim));
      for (auto& e : eps) e = rng.normal();
      const Vec z = transform(eps, params);
      values[i] = model.log_density(z) - log_q(z, params);
    }
  });
  double total = 0.0;
  for (double v : values) total += v;
  const double elbo = total / static_cast<double>(samples);
  if (!std::isfinite(elbo)) throw ModelError(model.name() + ": non-finite ELBO estimate");
  return elbo;
}

void OptimConfig::validate() const {
  if (!(step > 0.0)) throw std::invalid_argument("step size must be positive");
  if (iterations < 1) throw std::invalid_argument("need at least one iteration");
  if (samples < 1) throw std::invalid_argument("need at least one sample per iteration");
  if (eval_every > 0 && elbo_samples < 1) throw std::invalid_argument("ELBO evaluation needs at least one sample");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("Adam betas must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
}

Trace optimize_loop(const LogDensityModel& model, const VarParams& init, const OptimConfig& cfg) {
  cfg.validate();
  init.validate();
  if (init.dim() != model.dim()) throw DimensionError("optimize_loop: initial parameters do not match model dimension");
  check_capability(model, cfg.kind, cfg.samples);

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  Trace trace;
  VarParams params = init;
  AdamState adam = AdamState::init(model.dim());
  const AdamHyper hyper{cfg.step, cfg.beta1, cfg.beta2, cfg.adam_epsilon};

  auto fail = [&](std::size_t t, const std::string& why) {
    trace.status = TraceStatus::kDiverged;
    trace.message = "iteration " + std::to_string(t) + ": " + why;
  };
  auto record = [&](std::size_t t, double grad_norm) -> bool {
    TraceRecord rec;
    rec.iteration = t;
    rec.grad_norm = grad_norm;
    if (cfg.eval_every > 0) {
      try {
        // Every evaluation in a trace reuses one ELBO stream (common random
        // numbers), so differences along the trace reflect parameter changes.
        rec.elbo = estimate_elbo(model, params, cfg.elbo_samples, cfg.seed, 0, cfg.threads);
      } catch (const ModelError& e) {
        fail(t, e.what());
        return false;
      }
    }
    if (cfg.record_params) rec.params = params;
    rec.seconds = elapsed();
    trace.records.push_back(std::move(rec));
    return true;
  };

  if (cfg.snapshot_iterations.contains(0)) trace.snapshots.emplace(0, params);
  if (!record(0, std::numeric_limits<double>::quiet_NaN())) {
    trace.final_params = params;
    return trace;
  }

  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    const NoiseBatch noise = make_noise_batch(cfg.seed, t - 1, cfg.samples, model.dim());
    GradEstimate grad;
    try {
      grad = rv_rge_batch(model, params, noise, cfg.kind);
    } catch (const ModelError& e) {
      fail(t, e.what());
      break;
    }
    if (!grad.finite()) {
      fail(t, "non-finite gradient estimate");
      break;
    }
    if (cfg.optimizer == OptimizerKind::kSgd) {
      params = sgd_step(params, grad, cfg.step);
    } else {
      std::tie(adam, params) = adam_step(adam, params, grad, hyper);
    }
    trace.iterations_run = t;
    const Vec flat = params.flat();
    if (!flat.allFinite()) {
      fail(t, "non-finite parameters");
      break;
    }
    if (flat.norm() > cfg.divergence_norm) {
      fail(t, "parameter norm exceeded " + std::to_string(cfg.divergence_norm));
      break;
    }
    if (cfg.snapshot_iterations.contains(t)) trace.snapshots.emplace(t, params);
    const bool due = cfg.eval_every > 0 ? (t % cfg.eval_every == 0 || t == cfg.iterations) : t == cfg.iterations;
    if (due && !record(t, grad.flat().norm())) break;
  }
  trace.final_params = params;
  return trace;
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(const Trace& trace, const std::filesystem::path& path, bool include_time) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "iter,seconds,elbo,grad_norm\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << format_double(include_time ? r.seconds : 0.0) << ',' << format_double(r.elbo) << ','
        << format_double(r.grad_norm) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string trace_sidecar_json(const OptimConfig& cfg, const LogDensityModel& model, const VarParams& init,
                               const Trace& trace) {
  nlohmann::ordered_json j;
  j["model"] = model.name();
  j["dim"] = model.dim();
  nlohmann::ordered_json c;
  c["estimator"] = to_string(cfg.kind);
  c["samples"] = cfg.samples;
  c["step"] = cfg.step;
  c["optimizer"] = to_string(cfg.optimizer);
  c["beta1"] = cfg.beta1;
  c["beta2"] = cfg.beta2;
  c["adam_epsilon"] = cfg.adam_epsilon;
  c["iterations"] = cfg.iterations;
  c["seed"] = cfg.seed;
  c["elbo_samples"] = cfg.elbo_samples;
  c["eval_every"] = cfg.eval_every;
  c["divergence_norm"] = cfg.divergence_norm;
  j["config"] = c;
  j["init"] = {{"mean", std::vector<double>(init.mean.begin(), init.mean.end())},
               {"log_scale", std::vector<double>(init.log_scale.begin(), init.log_scale.end())}};
  j["status"] = trace.status == TraceStatus::kCompleted ? "completed" : "diverged";
  j["message"] = trace.message;
  j["iterations_run"] = trace.iterations_run;
  return j.dump(2) + "\n";
}

}  // namespace mcvi
