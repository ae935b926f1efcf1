// mcvi: command line driver for gradient checks, variance reports and
// optimization traces.

#include "mcvi/derivative_check.hpp"
#include "mcvi/harness.hpp"
#include "mcvi/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCapability = 3;
constexpr int kExitDivergence = 4;

struct Globals {
  unsigned threads = mcvi::default_thread_count();
  double init_mean = 0.0;
  double init_logs = mcvi::kDefaultInitLogScale;
};

void add_model_options(CLI::App* cmd, mcvi::ModelOptions& m) {
  cmd->add_option("--model", m.model, "gaussian, frisk or bnn")
      ->check(CLI::IsMember({"gaussian", "frisk", "bnn"}))
      ->capture_default_str();
  cmd->add_option("--dim", m.dim, "gaussian dimension")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--eth", m.ethnicities, "synthetic frisk ethnicity groups")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--precincts", m.precincts, "synthetic frisk precincts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--hidden", m.hidden, "bnn hidden units")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--rows", m.rows, "bnn data rows (subsample size)")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--data", m.data_path, "frisk or regression CSV; synthetic data when omitted")
      ->check(CLI::ExistingFile);
  cmd->add_option("--data-seed", m.data_seed, "seed for synthetic data and row subsampling")->capture_default_str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

int cmd_check_grads(const mcvi::ModelOptions& mopts, mcvi::DerivativeCheckConfig cfg) {
  const auto model = mcvi::build_model(mopts);
  const auto res = mcvi::check_derivatives(*model, cfg);
  std::printf("model %s dim %zu points %zu\n", res.model.c_str(), res.dim, res.points);
  std::printf("  gradient   max rel err %.3e (tol %.0e)\n", res.max_grad_err, cfg.grad_tol);
  std::printf("  hvp        max rel err %.3e (tol %.0e)\n", res.max_hvp_err, cfg.hvp_tol);
  std::printf("  symmetry   max rel err %.3e (tol %.0e)\n", res.max_symmetry_err, cfg.symmetry_tol);
  if (res.max_dense_err >= 0.0)
    std::printf("  dense      max rel err %.3e (tol %.0e)\n", res.max_dense_err, cfg.dense_tol);
  else
    std::printf("  dense      not offered by this model\n");
  for (const auto& f : res.failures) std::printf("  FAIL %s\n", f.c_str());
  std::printf("%s\n", res.passed ? "PASS" : "FAIL");
  return res.passed ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo variational inference with reduced-variance gradient estimators"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--threads", g.threads, "worker threads (never changes numerical output)")
      ->check(CLI::PositiveNumber)
      ->default_str("all cores");
  app.add_option("--init-mean", g.init_mean, "initial variational mean, every component")->capture_default_str();
  app.add_option("--init-logs", g.init_logs, "initial log-scale, every component")->capture_default_str();

  mcvi::ModelOptions mopts;
  std::uint64_t seed = 0;
  std::function<int()> action;

  // check-grads
  auto* check = app.add_subcommand("check-grads", "compare analytic derivatives with finite differences");
  mcvi::DerivativeCheckConfig check_cfg;
  add_model_options(check, mopts);
  check->add_option("--seed", seed, "seed for the random test points")->capture_default_str();
  check->add_option("--points", check_cfg.points, "number of random points")->capture_default_str();
  check->add_option("--fd-step", check_cfg.fd.step, "finite-difference step")->capture_default_str();
  check->callback([&] {
    check_cfg.seed = seed;
    action = [&] { return cmd_check_grads(mopts, check_cfg); };
  });

  // variance-report
  auto* report = app.add_subcommand("variance-report", "estimator variance at early/mid/late iterates");
  add_model_options(report, mopts);
  std::string kinds = "mc,full,diag,hvplocal,hvpmean";
  std::size_t rep_samples = 10;
  std::size_t reps = 1000;
  std::string out_path;
  std::string format;
  mcvi::OptimConfig ref_cfg;
  ref_cfg.samples = 10;
  report->add_option("--kinds", kinds, "estimators: mc,full,diag,hvplocal,hvpmean")->capture_default_str();
  report->add_option("--L", rep_samples, "samples per gradient estimate")->check(CLI::PositiveNumber)->capture_default_str();
  report->add_option("--reps", reps, "replications per estimator")->check(CLI::Range(100ul, 100000000ul))->capture_default_str();
  report->add_option("--seed", seed, "seed for the reference run and replications")->capture_default_str();
  report->add_option("--out", out_path, "report file")->required();
  report->add_option("--format", format, "csv or json (default: from the file extension)")
      ->check(CLI::IsMember({"csv", "json"}));
  report->add_option("--ref-iters", ref_cfg.iterations, "iterations of the MC reference run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  report->add_option("--ref-L", ref_cfg.samples, "samples per iteration of the reference run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  report->add_option("--ref-step", ref_cfg.step, "Adam step of the reference run")->capture_default_str();
  report->callback([&] {
    action = [&] {
      const auto model = mcvi::build_model(mopts);
      const auto init = mcvi::initial_params(model->dim(), g.init_mean, g.init_logs);
      ref_cfg.seed = seed;
      ref_cfg.threads = g.threads;
      const auto checkpoints = mcvi::run_checkpointing(*model, init, ref_cfg);
      auto rep = mcvi::variance_report(*model, checkpoints, mcvi::parse_estimator_kinds(kinds), rep_samples, reps,
                                       seed, g.threads);
      rep.reference = {ref_cfg.iterations, ref_cfg.samples, ref_cfg.step, "adam", seed};
      for (const auto& it : rep.iterates)
        for (const auto& n : it.notices) std::fprintf(stderr, "notice [%s]: %s\n", it.label.c_str(), n.c_str());
      const std::filesystem::path path(out_path);
      if (format.empty()) format = path.extension() == ".json" ? "json" : "csv";
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      mcvi::emit_report(rep, mcvi::parse_report_format(format), path);
      return kExitOk;
    };
  });

  // optimize
  auto* opt = app.add_subcommand("optimize", "run one optimization trace");
  add_model_options(opt, mopts);
  mcvi::OptimConfig opt_cfg;
  std::string kind = "mc";
  std::string optimizer = "adam";
  std::string trace_path;
  bool record_time = false;
  opt->add_option("--kind", kind, "estimator: mc, full, diag, hvplocal, hvpmean")->capture_default_str();
  opt->add_option("--L", opt_cfg.samples, "samples per iteration")->check(CLI::PositiveNumber)->capture_default_str();
  opt->add_option("--step", opt_cfg.step, "step size")->check(CLI::PositiveNumber)->capture_default_str();
  opt->add_option("--iters", opt_cfg.iterations, "iterations")->check(CLI::PositiveNumber)->capture_default_str();
  opt->add_option("--optimizer", optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}))->capture_default_str();
  opt->add_option("--seed", seed, "seed for gradient noise and ELBO evaluation")->capture_default_str();
  opt->add_option("--elbo-samples", opt_cfg.elbo_samples, "samples per ELBO estimate")->capture_default_str();
  opt->add_option("--eval-every", opt_cfg.eval_every, "ELBO evaluation interval (0 disables)")->capture_default_str();
  opt->add_option("--trace", trace_path, "trace CSV; a JSON sidecar is written next to it")->required();
  opt->add_flag("--record-time", record_time, "write wall-clock seconds (output is then not reproducible)");
  opt->callback([&] {
    action = [&] {
      const auto model = mcvi::build_model(mopts);
      const auto init = mcvi::initial_params(model->dim(), g.init_mean, g.init_logs);
      opt_cfg.kind = mcvi::parse_estimator_kind(kind);
      opt_cfg.optimizer = mcvi::parse_optimizer_kind(optimizer);
      opt_cfg.seed = seed;
      opt_cfg.threads = g.threads;
      mcvi::check_capability(*model, opt_cfg.kind, opt_cfg.samples);
      const auto trace = mcvi::optimize_loop(*model, init, opt_cfg);
      const std::filesystem::path path(trace_path);
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      mcvi::write_trace_csv(trace, path, record_time);
      auto sidecar = path;
      sidecar.replace_extension(".json");
      write_text(sidecar, mcvi::trace_sidecar_json(opt_cfg, *model, init, trace));
      if (trace.status == mcvi::TraceStatus::kDiverged) {
        std::fprintf(stderr, "diverged: %s\n", trace.message.c_str());
        return kExitDivergence;
      }
      const auto& last = trace.records.back();
      std::printf("iterations %zu final elbo %.6f\n", trace.iterations_run, last.elbo);
      return kExitOk;
    };
  });

  // convergence-suite
  auto* suite = app.add_subcommand("convergence-suite", "one trace per (estimator, L, step) grid cell");
  add_model_options(suite, mopts);
  std::string grid_text = "kinds=mc,hvplocal;L=2,10;step=0.05,0.1";
  std::string outdir;
  mcvi::OptimConfig suite_cfg;
  std::string suite_optimizer = "adam";
  bool suite_time = false;
  suite->add_option("--grid", grid_text, "kinds=..;L=..;step=..")->capture_default_str();
  suite->add_option("--seed", seed, "seed shared by every cell")->capture_default_str();
  suite->add_option("--outdir", outdir, "output directory")->required();
  suite->add_option("--iters", suite_cfg.iterations, "iterations per cell")->check(CLI::PositiveNumber)->capture_default_str();
  suite->add_option("--optimizer", suite_optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  suite->add_option("--elbo-samples", suite_cfg.elbo_samples, "samples per ELBO estimate")->capture_default_str();
  suite->add_option("--eval-every", suite_cfg.eval_every, "ELBO evaluation interval")->capture_default_str();
  suite->add_flag("--record-time", suite_time, "write wall-clock seconds (output is then not reproducible)");
  suite->callback([&] {
    action = [&] {
      const auto model = mcvi::build_model(mopts);
      const auto init = mcvi::initial_params(model->dim(), g.init_mean, g.init_logs);
      const auto grid = mcvi::ConvergenceGrid::parse(grid_text);
      suite_cfg.seed = seed;
      suite_cfg.threads = g.threads;
      suite_cfg.optimizer = mcvi::parse_optimizer_kind(suite_optimizer);
      const auto cells = mcvi::convergence_suite(*model, init, grid, suite_cfg, outdir, suite_time);
      for (const auto& c : cells) {
        std::printf("%-32s %-9s final elbo %.6f\n", c.trace_path.filename().string().c_str(),
                    c.status == mcvi::TraceStatus::kCompleted ? "completed" : "diverged", c.final_elbo);
      }
      return kExitOk;
    };
  });

  // gen-frisk
  auto* gen = app.add_subcommand("gen-frisk", "write a synthetic frisk dataset drawn from the model prior");
  int gen_eth = 3;
  int gen_precincts = 31;
  std::string gen_out;
  gen->add_option("--eth", gen_eth, "ethnicity groups")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--precincts", gen_precincts, "precincts")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--seed", seed, "data seed")->capture_default_str();
  gen->add_option("--out", gen_out, "output CSV")->required();
  gen->callback([&] {
    action = [&] {
      const auto data = mcvi::generate_frisk_synthetic(gen_eth, gen_precincts, seed);
      const std::filesystem::path path(gen_out);
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      mcvi::write_frisk_csv(data, path);
      return kExitOk;
    };
  });

  // gen-regression
  auto* genr = app.add_subcommand("gen-regression", "write a synthetic regression CSV usable with --model bnn --data");
  std::size_t genr_rows = 100;
  std::size_t genr_features = 11;
  std::string genr_out;
  genr->add_option("--rows", genr_rows, "rows")->check(CLI::PositiveNumber)->capture_default_str();
  genr->add_option("--features", genr_features, "feature columns")->check(CLI::PositiveNumber)->capture_default_str();
  genr->add_option("--seed", seed, "data seed")->capture_default_str();
  genr->add_option("--out", genr_out, "output CSV (';' delimited)")->required();
  genr->callback([&] {
    action = [&] {
      const auto data = mcvi::generate_regression_synthetic(genr_rows, genr_features, seed);
      const std::filesystem::path path(genr_out);
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      mcvi::write_regression_csv(data, path);
      return kExitOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    return action ? action() : kExitValidation;
  } catch (const mcvi::CapabilityError& e) {
    std::fprintf(stderr, "capability error: %s\n", e.what());
    return kExitCapability;
  } catch (const mcvi::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return kExitDivergence;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitValidation;
  } catch (const mcvi::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
