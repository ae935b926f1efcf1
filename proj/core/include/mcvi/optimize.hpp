#pragma once

#include "mcvi/estimators.hpp"
#include "mcvi/model.hpp"
#include "mcvi/vardist.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcvi {

/// The optimizer left the finite region or exceeded the parameter-norm guard.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OptimizerKind { kSgd, kAdam };
std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct AdamHyper {
  double step = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates over the flat [mean; log_scale] parameter vector.
struct AdamState {
  Vec first;
  Vec second;
  std::uint64_t t = 0;

  static AdamState init(std::size_t dim);
};

/// Ascent step: params + step * grad.
VarParams sgd_step(const VarParams& params, const GradEstimate& grad, double step);

/// Bias-corrected Adam ascent step.
std::pair<AdamState, VarParams> adam_step(const AdamState& state, const VarParams& params, const GradEstimate& grad,
                                          const AdamHyper& hyper);

/// Monte Carlo ELBO: mean of ln p(z) - ln q(z) over n draws z ~ q. The
/// draws come from Purpose::kElbo streams keyed by (seed, eval_index), in
/// fixed-size blocks so the result is independent of `threads`.
double estimate_elbo(const LogDensityModel& model, const VarParams& params, std::size_t samples, std::uint64_t seed,
                     std::uint64_t eval_index, unsigned threads = 1);

struct OptimConfig {
  EstimatorKind kind = EstimatorKind::kMC;
  std::size_t samples = 10;  // L
  double step = 0.05;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t iterations = 1500;
  std::uint64_t seed = 0;
  std::size_t elbo_samples = 2000;
  /// ELBO is recorded at iteration 0, every eval_every iterations, and at the
  /// last iteration. 0 disables ELBO evaluation.
  std::size_t eval_every = 10;
  /// Iterations whose parameters are kept in Trace::snapshots.
  std::set<std::size_t> snapshot_iterations;
  bool record_params = false;
  double divergence_norm = 1e6;
  unsigned threads = 1;

  void validate() const;
};

struct TraceRecord {
  std::size_t iteration = 0;
  double seconds = 0.0;
  double elbo = std::numeric_limits<double>::quiet_NaN();
  /// Norm of the flat gradient estimate that produced this iterate (NaN at 0).
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  std::optional<VarParams> params;
};

enum class TraceStatus { kCompleted, kDiverged };

struct Trace {
  std::vector<TraceRecord> records;
  TraceStatus status = TraceStatus::kCompleted;
  std::string message;
  VarParams final_params;
  std::size_t iterations_run = 0;
  std::map<std::size_t, VarParams> snapshots;
};

/// Stochastic gradient ascent on the ELBO with the configured estimator.
/// Iteration t (1-based) draws its noise batch from stream iteration t-1.
/// Divergence (non-finite values or ||params|| above the guard) ends the run
/// with status kDiverged instead of throwing.
Trace optimize_loop(const LogDensityModel& model, const VarParams& init, const OptimConfig& cfg);

/// CSV with header iter,seconds,elbo,grad_norm. With include_time = false the
/// seconds column is written as 0 so the file is reproducible bit for bit.
void write_trace_csv(const Trace& trace, const std::filesystem::path& path, bool include_time);

/// JSON provenance record of the run configuration and outcome.
std::string trace_sidecar_json(const OptimConfig& cfg, const LogDensityModel& model, const VarParams& init,
                               const Trace& trace);

}  // namespace mcvi
