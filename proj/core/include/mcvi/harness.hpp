#pragma once

#include "mcvi/datasets.hpp"
#include "mcvi/estimators.hpp"
#include "mcvi/model.hpp"
#include "mcvi/optimize.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace mcvi {

// ---------------------------------------------------------------------------
// Model construction shared by the CLI, tests and benchmarks.

struct ModelOptions {
  std::string model = "frisk";  // gaussian | frisk | bnn
  std::size_t dim = 5;          // gaussian
  int ethnicities = 3;          // frisk (synthetic)
  int precincts = 31;           // frisk (synthetic)
  std::size_t hidden = 50;      // bnn
  std::size_t rows = 100;       // bnn data subsample
  std::size_t features = 11;    // bnn synthetic data
  std::string data_path;        // frisk/bnn CSV; synthetic data when empty
  std::uint64_t data_seed = 0;
};

std::unique_ptr<LogDensityModel> build_model(const ModelOptions& opts);

// ---------------------------------------------------------------------------
// Checkpoints along a reference optimization.

struct IterateCheckpoint {
  std::string label;  // early | mid | late
  std::size_t iteration = 0;
  VarParams params;
};

/// One MC-estimator run with `cfg` (its kind is forced to MC); snapshots at
/// iterations 10, T/2 and T. Throws DivergenceError if the run diverges.
std::vector<IterateCheckpoint> run_checkpointing(const LogDensityModel& model, const VarParams& init,
                                                 OptimConfig cfg);

// ---------------------------------------------------------------------------
// Variance reports.

enum class Block { kMean = 0, kLogScale = 1, kCombined = 2 };
std::string to_string(Block block);

struct BlockVariance {
  double ave_var = 0.0;
  double ave_var_pct = 0.0;
  double norm_var = 0.0;
  double norm_var_pct = 0.0;

  friend bool operator==(const BlockVariance&, const BlockVariance&) = default;
};

struct EstimatorVariance {
  EstimatorKind kind = EstimatorKind::kMC;
  std::array<BlockVariance, 3> blocks{};  // indexed by Block

  const BlockVariance& block(Block b) const { return blocks[static_cast<std::size_t>(b)]; }
  friend bool operator==(const EstimatorVariance&, const EstimatorVariance&) = default;
};

struct IterateVariance {
  std::string label;
  std::size_t iteration = 0;
  std::vector<EstimatorVariance> rows;  // MC first
  std::vector<std::string> notices;     // skipped estimators and why

  const EstimatorVariance* find(EstimatorKind kind) const;
  friend bool operator==(const IterateVariance&, const IterateVariance&) = default;
};

struct ReferenceRun {
  std::size_t iterations = 0;
  std::size_t samples = 0;
  double step = 0.0;
  std::string optimizer;
  std::uint64_t seed = 0;
  friend bool operator==(const ReferenceRun&, const ReferenceRun&) = default;
};

struct VarianceReport {
  std::string model;
  std::size_t dim = 0;
  std::size_t samples = 0;       // L
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  /// What the log-scale block measures; always the chain-ruled d/d(log s).
  std::string log_scale_gradient = "chain-ruled d/d(log s)";
  ReferenceRun reference;
  std::vector<IterateVariance> iterates;

  friend bool operator==(const VarianceReport&, const VarianceReport&) = default;
};

/// Draws `replications` independent L-sample estimates per kind at the
/// checkpoint (replication r uses noise stream (seed, r); all kinds share
/// it) and summarizes per block. MC is always measured as the baseline.
/// Kinds the model cannot support are skipped with a notice.
IterateVariance measure_variance(const LogDensityModel& model, const IterateCheckpoint& checkpoint,
                                 const std::vector<EstimatorKind>& kinds, std::size_t samples,
                                 std::size_t replications, std::uint64_t seed, unsigned threads = 1);

VarianceReport variance_report(const LogDensityModel& model, const std::vector<IterateCheckpoint>& checkpoints,
                               const std::vector<EstimatorKind>& kinds, std::size_t samples,
                               std::size_t replications, std::uint64_t seed, unsigned threads = 1);

enum class ReportFormat { kCsv, kJson };
ReportFormat parse_report_format(std::string_view name);

/// Columns iterate,estimator,block,ave_var,ave_var_pct,norm_var,norm_var_pct.
std::string report_to_csv(const VarianceReport& report);
std::string report_to_json(const VarianceReport& report);
VarianceReport report_from_json(const std::string& text);
void emit_report(const VarianceReport& report, ReportFormat format, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Convergence suites.

struct ConvergenceGrid {
  std::vector<EstimatorKind> kinds;
  std::vector<std::size_t> samples;
  std::vector<double> steps;

  /// Parses "kinds=mc,hvplocal;L=2,10;step=0.05,0.1".
  static ConvergenceGrid parse(std::string_view text);
  std::size_t size() const { return kinds.size() * samples.size() * steps.size(); }
};

struct CellResult {
  EstimatorKind kind = EstimatorKind::kMC;
  std::size_t samples = 0;
  double step = 0.0;
  std::filesystem::path trace_path;
  TraceStatus status = TraceStatus::kCompleted;
  std::string message;
  double final_elbo = 0.0;
  VarParams initial;
  Trace trace;
};

std::string cell_file_stem(EstimatorKind kind, std::size_t samples, double step);

/// Runs optimize_loop for every grid cell from the common `init`, writing
/// <stem>.csv and <stem>.json into outdir plus summary.csv. Diverged cells
/// are recorded, not fatal. Unsupported estimators raise CapabilityError
/// before any run starts.
std::vector<CellResult> convergence_suite(const LogDensityModel& model, const VarParams& init,
                                          const ConvergenceGrid& grid, const OptimConfig& base,
                                          const std::filesystem::path& outdir, bool include_time = false);

}  // namespace mcvi
