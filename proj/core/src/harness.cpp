#include "mcvi/harness.hpp"

#include "mcvi/models/bnn.hpp"
#include "mcvi/models/frisk.hpp"
#include "mcvi/models/gaussian.hpp"
#include "mcvi/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mcvi {

std::unique_ptr<LogDensityModel> build_model(const ModelOptions& opts) {
  if (opts.model == "gaussian") {
    if (opts.dim < 1) throw std::invalid_argument("gaussian model needs --dim >= 1");
    return std::make_unique<GaussianModel>(random_gaussian_model(opts.dim, opts.data_seed));
  }
  if (opts.model == "frisk") {
    FriskDataset data = opts.data_path.empty()
                            ? generate_frisk_synthetic(opts.ethnicities, opts.precincts, opts.data_seed)
                            : read_frisk_csv(opts.data_path);
    return std::make_unique<FriskModel>(std::move(data));
  }
  if (opts.model == "bnn") {
    RegressionDataset data = opts.data_path.empty()
                                 ? generate_regression_synthetic(opts.rows, opts.features, opts.data_seed)
                                 : load_regression_csv(opts.data_path, opts.rows, opts.data_seed);
    BnnConfig cfg;
    cfg.hidden = opts.hidden;
    return std::make_unique<BnnModel>(std::move(data), cfg);
  }
  throw std::invalid_argument("unknown model '" + opts.model + "' (expected gaussian, frisk or bnn)");
}

std::vector<IterateCheckpoint> run_checkpointing(const LogDensityModel& model, const VarParams& init,
                                                 OptimConfig cfg) {
  cfg.kind = EstimatorKind::kMC;
  const std::size_t total = cfg.iterations;
  const std::array<std::pair<const char*, std::size_t>, 3> marks{
      {{"early", std::min<std::size_t>(10, total)}, {"mid", total / 2}, {"late", total}}};
  cfg.snapshot_iterations.clear();
  for (const auto& [label, it] : marks) cfg.snapshot_iterations.insert(it);
  cfg.eval_every = 0;

  const Trace trace = optimize_loop(model, init, cfg);
  if (trace.status != TraceStatus::kCompleted) throw DivergenceError("reference run diverged: " + trace.message);

  std::vector<IterateCheckpoint> out;
  for (const auto& [label, it] : marks) out.push_back({label, it, trace.snapshots.at(it)});
  return out;
}

std::string to_string(Block block) {
  switch (block) {
    case Block::kMean: return "mean";
    case Block::kLogScale: return "log_scale";
    case Block::kCombined: return "combined";
  }
  return "unknown";
}

const EstimatorVariance* IterateVariance::find(EstimatorKind kind) const {
  for (const auto& row : rows)
    if (row.kind == kind) return &row;
  return nullptr;
}

namespace {

double percent_of(double value, double baseline) {
  if (baseline == 0.0) return value == 0.0 ? 100.0 : std::numeric_limits<double>::infinity();
  return 100.0 * (value / baseline);
}

BlockVariance summarize(const std::vector<Vec>& samples) {
  BlockVariance b;
  b.ave_var = component_variances(samples).mean();
  b.norm_var = norm_variance(samples);
  return b;
}

}  // namespace

IterateVariance measure_variance(const LogDensityModel& model, const IterateCheckpoint& checkpoint,
                                 const std::vector<EstimatorKind>& kinds, std::size_t samples,
                                 std::size_t replications, std::uint64_t seed, unsigned threads) {
  if (replications < 100) throw std::invalid_argument("variance report needs at least 100 replications");
  if (checkpoint.params.dim() != model.dim()) throw DimensionError("checkpoint does not match model dimension");

  IterateVariance result;
  result.label = checkpoint.label;
  result.iteration = checkpoint.iteration;

  std::vector<EstimatorKind> active{EstimatorKind::kMC};
  for (auto kind : kinds) {
    if (std::find(active.begin(), active.end(), kind) != active.end()) continue;
    try {
      check_capability(model, kind, samples);
      active.push_back(kind);
    } catch (const CapabilityError& e) {
      result.notices.push_back("skipped " + to_string(kind) + ": " + e.what());
    }
  }
  check_capability(model, EstimatorKind::kMC, samples);

  const std::size_t d = model.dim();
  std::vector<std::vector<Vec>> flat(active.size(), std::vector<Vec>(replications));
  parallel_for(replications, threads, [&](std::size_t r) {
    const NoiseBatch noise = make_noise_batch(seed, r, samples, d, Purpose::kReplication);
    for (std::size_t k = 0; k < active.size(); ++k) {
      flat[k][r] = rv_rge_batch(model, checkpoint.params, noise, active[k]).flat();
    }
  });

  const auto nd = static_cast<Eigen::Index>(d);
  for (std::size_t k = 0; k < active.size(); ++k) {
    std::vector<Vec> mean_block;
    std::vector<Vec> scale_block;
    mean_block.reserve(replications);
    scale_block.reserve(replications);
    for (const auto& v : flat[k]) {
      if (!v.allFinite()) throw ModelError("non-finite gradient estimate while measuring variance");
      mean_block.push_back(v.head(nd));
      scale_block.push_back(v.tail(nd));
    }
    EstimatorVariance row;
    row.kind = active[k];
    row.blocks[0] = summarize(mean_block);
    row.blocks[1] = summarize(scale_block);
    row.blocks[2] = summarize(flat[k]);
    result.rows.push_back(row);
  }
  const auto baseline = result.rows.front().blocks;
  for (auto& row : result.rows) {
    for (std::size_t b = 0; b < 3; ++b) {
      row.blocks[b].ave_var_pct = percent_of(row.blocks[b].ave_var, baseline[b].ave_var);
      row.blocks[b].norm_var_pct = percent_of(row.blocks[b].norm_var, baseline[b].norm_var);
    }
  }
  return result;
}

VarianceReport variance_report(const LogDensityModel& model, const std::vector<IterateCheckpoint>& checkpoints,
                               const std::vector<EstimatorKind>& kinds, std::size_t samples,
                               std::size_t replications, std::uint64_t seed, unsigned threads) {
  VarianceReport report;
  report.model = model.name();
  report.dim = model.dim();
  report.samples = samples;
  report.replications = replications;
  report.seed = seed;
  for (const auto& cp : checkpoints) {
    report.iterates.push_back(measure_variance(model, cp, kinds, samples, replications, seed, threads));
  }
  return report;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw std::invalid_argument("unknown report format '" + std::string(name) + "'");
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr std::array<Block, 3> kBlocks{Block::kMean, Block::kLogScale, Block::kCombined};

Block parse_block(const std::string& name) {
  for (auto b : kBlocks)
    if (to_string(b) == name) return b;
  throw std::invalid_argument("unknown block '" + name + "'");
}

}  // namespace

std::string report_to_csv(const VarianceReport& report) {
  std::ostringstream out;
  out << "iterate,estimator,block,ave_var,ave_var_pct,norm_var,norm_var_pct\n";
  for (const auto& it : report.iterates) {
    for (const auto& row : it.rows) {
      for (auto b : kBlocks) {
        const auto& v = row.block(b);
        out << it.label << ',' << to_string(row.kind) << ',' << to_string(b) << ',' << num(v.ave_var) << ','
            << num(v.ave_var_pct) << ',' << num(v.norm_var) << ',' << num(v.norm_var_pct) << '\n';
      }
    }
  }
  return out.str();
}

std::string report_to_json(const VarianceReport& report) {
  nlohmann::ordered_json j;
  j["model"] = report.model;
  j["dim"] = report.dim;
  j["samples"] = report.samples;
  j["replications"] = report.replications;
  j["seed"] = report.seed;
  j["log_scale_gradient"] = report.log_scale_gradient;
  j["reference"] = {{"iterations", report.reference.iterations},
                    {"samples", report.reference.samples},
                    {"step", report.reference.step},
                    {"optimizer", report.reference.optimizer},
                    {"seed", report.reference.seed}};
  auto iterates = nlohmann::ordered_json::array();
  for (const auto& it : report.iterates) {
    nlohmann::ordered_json ji;
    ji["label"] = it.label;
    ji["iteration"] = it.iteration;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : it.rows) {
      nlohmann::ordered_json jr;
      jr["estimator"] = to_string(row.kind);
      for (auto b : kBlocks) {
        const auto& v = row.block(b);
        jr["blocks"][to_string(b)] = {{"ave_var", v.ave_var},
                                      {"ave_var_pct", v.ave_var_pct},
                                      {"norm_var", v.norm_var},
                                      {"norm_var_pct", v.norm_var_pct}};
      }
      rows.push_back(jr);
    }
    ji["rows"] = rows;
    ji["notices"] = it.notices;
    iterates.push_back(ji);
  }
  j["iterates"] = iterates;
  return j.dump(2) + "\n";
}

VarianceReport report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  VarianceReport report;
  report.model = j.at("model").get<std::string>();
  report.dim = j.at("dim").get<std::size_t>();
  report.samples = j.at("samples").get<std::size_t>();
  report.replications = j.at("replications").get<std::size_t>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.log_scale_gradient = j.at("log_scale_gradient").get<std::string>();
  const auto& ref = j.at("reference");
  report.reference = {ref.at("iterations").get<std::size_t>(), ref.at("samples").get<std::size_t>(),
                      ref.at("step").get<double>(), ref.at("optimizer").get<std::string>(),
                      ref.at("seed").get<std::uint64_t>()};
  for (const auto& ji : j.at("iterates")) {
    IterateVariance it;
    it.label = ji.at("label").get<std::string>();
    it.iteration = ji.at("iteration").get<std::size_t>();
    it.notices = ji.at("notices").get<std::vector<std::string>>();
    for (const auto& jr : ji.at("rows")) {
      EstimatorVariance row;
      row.kind = parse_estimator_kind(jr.at("estimator").get<std::string>());
      for (const auto& [name, jb] : jr.at("blocks").items()) {
        auto& v = row.blocks[static_cast<std::size_t>(parse_block(name))];
        v.ave_var = jb.at("ave_var").get<double>();
        v.ave_var_pct = jb.at("ave_var_pct").get<double>();
        v.norm_var = jb.at("norm_var").get<double>();
        v.norm_var_pct = jb.at("norm_var_pct").get<double>();
      }
      it.rows.push_back(row);
    }
    report.iterates.push_back(std::move(it));
  }
  return report;
}

void emit_report(const VarianceReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << (format == ReportFormat::kCsv ? report_to_csv(report) : report_to_json(report));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ConvergenceGrid ConvergenceGrid::parse(std::string_view text) {
  ConvergenceGrid grid;
  std::istringstream in{std::string(text)};
  std::string part;
  while (std::getline(in, part, ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("grid entry '" + part + "' is not key=values");
    const std::string key = part.substr(0, eq);
    const std::string values = part.substr(eq + 1);
    std::istringstream vin(values);
    std::string item;
    if (key == "kinds" || key == "kind") {
      grid.kinds = parse_estimator_kinds(values);
    } else if (key == "L" || key == "samples") {
      while (std::getline(vin, item, ',')) grid.samples.push_back(std::stoul(item));
    } else if (key == "step" || key == "steps") {
      while (std::getline(vin, item, ',')) grid.steps.push_back(std::stod(item));
    } else {
      throw std::invalid_argument("unknown grid key '" + key + "' (expected kinds, L, step)");
    }
  }
  if (grid.size() == 0) throw std::invalid_argument("convergence grid is empty; need kinds=..;L=..;step=..");
  return grid;
}

std::string cell_file_stem(EstimatorKind kind, std::size_t samples, double step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", step);
  return to_string(kind) + "_L" + std::to_string(samples) + "_step" + buf;
}

std::vector<CellResult> convergence_suite(const LogDensityModel& model, const VarParams& init,
                                          const ConvergenceGrid& grid, const OptimConfig& base,
                                          const std::filesystem::path& outdir, bool include_time) {
  if (grid.size() == 0) throw std::invalid_argument("convergence grid is empty");
  std::vector<CellResult> cells;
  for (auto kind : grid.kinds)
    for (auto l : grid.samples)
      for (auto step : grid.steps) {
        check_capability(model, kind, l);
        CellResult cell;
        cell.kind = kind;
        cell.samples = l;
        cell.step = step;
        cell.initial = init;
        cells.push_back(std::move(cell));
      }
  std::filesystem::create_directories(outdir);

  parallel_for(cells.size(), base.threads, [&](std::size_t i) {
    auto& cell = cells[i];
    OptimConfig cfg = base;
    cfg.kind = cell.kind;
    cfg.samples = cell.samples;
    cfg.step = cell.step;
    cell.trace = optimize_loop(model, init, cfg);
    cell.status = cell.trace.status;
    cell.message = cell.trace.message;
    cell.final_elbo = cell.trace.records.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                 : cell.trace.records.back().elbo;
    const std::string stem = cell_file_stem(cell.kind, cell.samples, cell.step);
    cell.trace_path = outdir / (stem + ".csv");
    write_trace_csv(cell.trace, cell.trace_path, include_time);
    std::ofstream sidecar(outdir / (stem + ".json"));
    sidecar << trace_sidecar_json(cfg, model, init, cell.trace);
  });

  std::ofstream summary(outdir / "summary.csv");
  summary << "estimator,L,step,status,final_elbo,trace_file\n";
  for (const auto& cell : cells) {
    char step[32];
    std::snprintf(step, sizeof step, "%g", cell.step);
    summary << to_string(cell.kind) << ',' << cell.samples << ',' << step << ','
            << (cell.status == TraceStatus::kCompleted ? "completed" : "diverged") << ',' << num(cell.final_elbo)
            << ',' << cell.trace_path.filename().string() << '\n';
  }
  return cells;
}

}  // namespace mcvi
