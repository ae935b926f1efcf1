// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any selected criterion fails.
//
//   mcvi_acceptance [--only N] [--cli path/to/mcvi] [--workdir DIR]

#include "mcvi/derivative_check.hpp"
#include "mcvi/harness.hpp"
#include "mcvi/models/bnn.hpp"
#include "mcvi/models/frisk.hpp"
#include "mcvi/models/gaussian.hpp"
#include "mcvi/parallel.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace mcvi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  std::string cli;
  fs::path workdir;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Shared synthetic frisk problem: E=3, P=31, data seed 0, reference seed 0.
const FriskModel& frisk() {
  static const FriskModel model(generate_frisk_synthetic(3, 31, 0));
  return model;
}

const std::vector<IterateCheckpoint>& frisk_checkpoints() {
  static const auto cps = [] {
    OptimConfig cfg;  // MC, L = 10, Adam step 0.05, T = 1500, seed 0
    return run_checkpointing(frisk(), initial_params(frisk().dim()), cfg);
  }();
  return cps;
}

Outcome gradient_correctness(const Context&) {
  DerivativeCheckConfig cfg;
  cfg.points = 20;
  cfg.seed = 1;
  const GaussianModel gauss = random_gaussian_model(5, 0);
  const BnnModel bnn(generate_regression_synthetic(100, 11, 0));
  bool pass = true;
  std::string detail;
  for (const LogDensityModel* m : {static_cast<const LogDensityModel*>(&gauss),
                                   static_cast<const LogDensityModel*>(&frisk()),
                                   static_cast<const LogDensityModel*>(&bnn)}) {
    const auto r = check_derivatives(*m, cfg);
    pass = pass && r.passed;
    detail += fmt("%s grad %.1e hvp %.1e", m->name().c_str(), r.max_grad_err, r.max_hvp_err);
    if (r.max_dense_err >= 0) detail += fmt(" dense %.1e", r.max_dense_err);
    detail += "; ";
  }
  return {pass, detail};
}

Outcome quadratic_exactness(const Context&) {
  const GaussianModel model = random_gaussian_model(5, 11);
  const VarParams p{mcvi::testing::random_vec(11, 1, 5), Vec::Zero(5)};
  std::vector<Vec> rv, mc;
  for (std::size_t r = 0; r < 1000; ++r) {
    const auto noise = make_noise_batch(11, r, 1, 5);
    rv.push_back(rv_rge_batch(model, p, noise, EstimatorKind::kFullHessian).flat());
    mc.push_back(mc_rge_batch(model, p, noise).flat());
  }
  const Vec var = component_variances(rv);
  const Vec mean = component_means(rv);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < var.size(); ++i) worst = std::max(worst, var[i] / (1.0 + mean[i] * mean[i]));
  const double mc_min = component_variances(mc).minCoeff();
  return {worst <= 1e-20 && mc_min > 1e-2,
          fmt("max var/(1+mean^2) %.2e (<= 1e-20), min MC variance %.3g (> 1e-2)", worst, mc_min)};
}

Outcome unbiasedness(const Context&) {
  const auto& model = frisk();
  const auto& p = frisk_checkpoints()[0].params;
  const std::size_t n = 100'000;
  const auto d = model.dim();
  std::vector<Vec> diffs(n);
  parallel_for(n, 0, [&](std::size_t r) {
    const auto noise = make_noise_batch(3, r, 2, d, Purpose::kReplication);
    diffs[r] = rv_rge_batch(model, p, noise, EstimatorKind::kHvpLocal).flat() - mc_rge_batch(model, p, noise).flat();
  });
  const Vec mean = component_means(diffs);
  const Vec se = (component_variances(diffs) / static_cast<double>(n)).cwiseSqrt();
  double worst = 0.0;
  int bad = 0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double z = std::abs(mean[i]) / se[i];
    worst = std::max(worst, z);
    if (!(z <= 4.0)) ++bad;
  }
  return {bad == 0, fmt("%d of %zu components beyond 4 SE; max |diff|/SE %.2f", bad, 2 * d, worst)};
}

const IterateVariance& frisk_variance(std::size_t which) {
  static std::map<std::size_t, IterateVariance> cache;
  auto it = cache.find(which);
  if (it == cache.end()) {
    const std::vector<EstimatorKind> kinds{EstimatorKind::kFullHessian, EstimatorKind::kHessianDiag,
                                           EstimatorKind::kHvpLocal};
    it = cache.emplace(which, measure_variance(frisk(), frisk_checkpoints()[which], kinds, 10, 1000, 0, 0)).first;
  }
  return it->second;
}

double pct(const IterateVariance& v, EstimatorKind k, Block b) { return v.find(k)->block(b).ave_var_pct; }

Outcome variance_magnitude(const Context&) {
  const auto& v = frisk_variance(0);
  const double full = pct(v, EstimatorKind::kFullHessian, Block::kMean);
  const double local = pct(v, EstimatorKind::kHvpLocal, Block::kMean);
  const double diag = pct(v, EstimatorKind::kHessianDiag, Block::kMean);
  const double local_all = pct(v, EstimatorKind::kHvpLocal, Block::kCombined);
  const bool pass = full <= 5 && local <= 5 && diag >= 5 && diag <= 80 && local_all <= 10;
  return {pass, fmt("mean block: full %.3f%% (<=5), hvplocal %.3f%% (<=5), diag %.3f%% (5..80); "
                    "hvplocal combined %.3f%% (<=10)",
                    full, local, diag, local_all)};
}

Outcome late_scale_degradation(const Context&) {
  const auto& v = frisk_variance(2);
  const double local = pct(v, EstimatorKind::kHvpLocal, Block::kLogScale);
  const double full = pct(v, EstimatorKind::kFullHessian, Block::kLogScale);
  return {local >= 50 && full <= 10,
          fmt("late log-scale block: hvplocal %.3f%% (>=50), full %.3f%% (<=10)", local, full)};
}

Outcome cv_identity(const Context&) {
  const auto model = mcvi::testing::cubic_model();
  const VarParams p{Vec::Zero(1), Vec::Constant(1, std::log(0.3))};
  const std::size_t n = 100'000;
  std::vector<Vec> hat(n), tilde(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto noise = make_noise_batch(6, i, 1, 1);
    const auto batch = prepare_cv_batch(model, p, EstimatorKind::kFullHessian, noise);
    hat[i] = mc_rge(model, p, noise.eps[0]).flat();
    tilde[i] = cv_samples(batch, p, noise)[0].flat();
  }
  const Vec c = estimate_control_coeff(hat, tilde).c;
  std::vector<Vec> cv(n);
  for (std::size_t i = 0; i < n; ++i) cv[i] = hat[i] - c.cwiseProduct(tilde[i]);
  const Vec vh = component_variances(hat), vt = component_variances(tilde), vc = component_variances(cv);
  const Vec mh = component_means(hat), mt = component_means(tilde);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < 2; ++j) {
    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) cov += (hat[i][j] - mh[j]) * (tilde[i][j] - mt[j]);
    cov /= static_cast<double>(n - 1);
    const double predicted = (1.0 - cov * cov / (vh[j] * vt[j])) * vh[j];
    worst = std::max(worst, std::abs(vc[j] - predicted) / predicted);
  }
  return {worst <= 0.05 && c[0] >= 0.9 && c[0] <= 1.1,
          fmt("max relative mismatch %.2e (<=0.05), mean-block c %.4f (0.9..1.1)", worst, c[0])};
}

Outcome loo_unbiased(const Context&) {
  const Mat h = mcvi::testing::random_symmetric(7, 5);
  const Vec s = mcvi::testing::random_vec(7, 3, 5, 0.5).array().exp();
  const Vec target = h.diagonal().cwiseProduct(s);
  const std::size_t n = 100'000;
  const std::size_t batch = 4;
  std::vector<Vec> est(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto noise = make_noise_batch(7, r, batch, 5, Purpose::kTest);
    std::vector<Vec> hv;
    for (const auto& e : noise.eps) hv.push_back(h * s.cwiseProduct(e));
    est[r] = loo_diag_estimate(noise.eps, hv, r % batch);
  }
  const Vec mean = component_means(est);
  const Vec se = (component_variances(est) / static_cast<double>(n)).cwiseSqrt();
  const double worst = ((mean - target).cwiseAbs().array() / se.array()).maxCoeff();
  return {worst <= 4.0, fmt("max |mean - diag(H)s|/SE %.2f (<=4)", worst)};
}

Outcome convergence_ordering(const Context&) {
  const auto& model = frisk();
  const auto init = initial_params(model.dim());
  auto run = [&](EstimatorKind k, std::size_t l) {
    OptimConfig cfg;
    cfg.kind = k;
    cfg.samples = l;
    cfg.step = 0.05;
    cfg.iterations = 1500;
    cfg.eval_every = 1;
    cfg.threads = 0;
    return optimize_loop(model, init, cfg);
  };
  const auto mc2 = run(EstimatorKind::kMC, 2);
  const auto local2 = run(EstimatorKind::kHvpLocal, 2);
  const auto mc50 = run(EstimatorKind::kMC, 50);
  for (const auto* t : {&mc2, &local2, &mc50})
    if (t->status != TraceStatus::kCompleted) return {false, "a run diverged: " + t->message};
  auto tail_sd = [](const Trace& t) {
    std::vector<double> e;
    for (std::size_t i = t.records.size() - 200; i < t.records.size(); ++i) e.push_back(t.records[i].elbo);
    return std::sqrt(sample_variance(e));
  };
  const double gap = std::abs(local2.records.back().elbo - mc50.records.back().elbo);
  const double sd_mc = tail_sd(mc2), sd_local = tail_sd(local2);
  return {gap <= 1.0 && sd_mc >= 2.0 * sd_local,
          fmt("final ELBO hvplocal L=2 %.3f vs MC L=50 %.3f (gap %.3f <= 1); tail sd MC L=2 %.3f vs hvplocal %.3f "
              "(ratio %.1f >= 2)",
              local2.records.back().elbo, mc50.records.back().elbo, gap, sd_mc, sd_local, sd_mc / sd_local)};
}

Outcome bnn_scale(const Context& ctx) {
  fs::create_directories(ctx.workdir);
  const auto csv = ctx.workdir / "regression.csv";
  write_regression_csv(generate_regression_synthetic(150, 11, 5), csv);
  const BnnModel model(load_regression_csv(csv, 100, 0));
  if (model.dim() != 653) return {false, fmt("dim %zu != 653", model.dim())};
  const auto init = initial_params(model.dim());
  std::string detail = "D=653";
  bool pass = true;
  for (auto kind : {EstimatorKind::kHvpLocal, EstimatorKind::kHvpMeanOnly}) {
    OptimConfig cfg;
    cfg.kind = kind;
    cfg.samples = 10;
    cfg.iterations = 200;
    cfg.eval_every = 10;
    cfg.threads = 0;
    const auto t = optimize_loop(model, init, cfg);
    bool finite = t.status == TraceStatus::kCompleted && t.records.back().iteration == 200;
    for (const auto& r : t.records) finite = finite && std::isfinite(r.elbo);
    pass = pass && finite;
    detail += fmt("; %s 200 iters %s (final ELBO %.2f)", to_string(kind).c_str(), finite ? "finite" : "NOT finite",
                  t.records.back().elbo);
  }
  bool refused = false;
  try {
    OptimConfig cfg;
    cfg.kind = EstimatorKind::kFullHessian;
    optimize_loop(model, init, cfg);
  } catch (const CapabilityError&) {
    refused = true;
  }
  pass = pass && refused;
  detail += refused ? "; full refused with capability error" : "; full NOT refused";
  if (!ctx.cli.empty()) {
    const std::string cmd = ctx.cli + " optimize --model bnn --data " + csv.string() + " --kind full --trace " +
                            (ctx.workdir / "full.csv").string() + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    const bool exit3 = WIFEXITED(rc) && WEXITSTATUS(rc) == 3;
    pass = pass && exit3;
    detail += exit3 ? " (CLI exit 3)" : " (CLI exit code wrong)";
  }
  return {pass, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const Context& ctx) {
  if (ctx.cli.empty()) return {false, "needs --cli"};
  struct Cmd {
    std::string name;
    std::string args;  // {out} is replaced by the run directory
  };
  const std::vector<Cmd> cmds{
      {"gen-frisk", "gen-frisk --seed 4 --out {out}/frisk.csv"},
      {"gen-regression", "gen-regression --seed 4 --out {out}/reg.csv"},
      {"check-grads", "check-grads --model frisk --seed 2"},
      {"variance-report-csv",
       "variance-report --model frisk --L 10 --reps 200 --ref-iters 300 --seed 5 --out {out}/report.csv"},
      {"variance-report-json",
       "variance-report --model bnn --rows 40 --kinds mc,hvplocal,hvpmean,full --L 4 --reps 100 --ref-iters 40 "
       "--seed 5 --out {out}/report.json"},
      {"optimize", "optimize --model frisk --kind hvplocal --L 4 --iters 200 --seed 5 --trace {out}/trace.csv"},
      {"optimize-data", "optimize --model frisk --data " + (ctx.workdir / "shared_frisk.csv").string() +
                            " --kind diag --L 3 --iters 100 --init-logs -1 --init-mean 0.1 --seed 6 --trace "
                            "{out}/trace_data.csv"},
      {"convergence-suite",
       "convergence-suite --model frisk --grid kinds=mc,hvplocal;L=2,5;step=0.05,0.1 --iters 100 --seed 5 "
       "--outdir {out}/suite"},
  };
  fs::remove_all(ctx.workdir);
  fs::create_directories(ctx.workdir);
  write_frisk_csv(generate_frisk_synthetic(3, 31, 12), ctx.workdir / "shared_frisk.csv");

  auto run_all = [&](const std::string& tag, int threads) -> bool {
    const auto dir = ctx.workdir / tag;
    fs::create_directories(dir);
    for (const auto& c : cmds) {
      std::string args = c.args;
      for (auto pos = args.find("{out}"); pos != std::string::npos; pos = args.find("{out}"))
        args.replace(pos, 5, dir.string());
      // Quote every word: the grid string contains ';'.
      std::string line = ctx.cli + " --threads " + std::to_string(threads) + " ";
      std::istringstream words(args);
      std::string w;
      while (words >> w) line += "'" + w + "' ";
      line += "> '" + (dir / (c.name + ".stdout")).string() + "' 2>/dev/null";
      const int rc = std::system(line.c_str());
      if (!WIFEXITED(rc) || WEXITSTATUS(rc) != 0) {
        std::fprintf(stderr, "command failed (%d): %s\n", rc, line.c_str());
        return false;
      }
    }
    return true;
  };
  if (!run_all("a", 1) || !run_all("b", 4)) return {false, "a CLI command failed"};

  std::size_t files = 0;
  std::vector<std::string> mismatched;
  for (const auto& e : fs::recursive_directory_iterator(ctx.workdir / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), ctx.workdir / "a");
    ++files;
    const auto other = ctx.workdir / "b" / rel;
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) mismatched.push_back(rel.string());
  }
  std::string detail = fmt("%zu files from %zu commands compared across --threads 1 and 4", files, cmds.size());
  for (const auto& m : mismatched) detail += "; differs: " + m;
  return {mismatched.empty() && files > cmds.size(), detail};
}

struct Criterion {
  int id;
  const char* title;
  double limit_seconds;
  std::function<Outcome(const Context&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.workdir = fs::temp_directory_path() / "mcvi_acceptance";
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (a == "--cli" && i + 1 < argc) {
      ctx.cli = argv[++i];
    } else if (a == "--workdir" && i + 1 < argc) {
      ctx.workdir = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--only N] [--cli PATH] [--workdir DIR]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "gradient correctness", 60, gradient_correctness},
      {2, "quadratic exactness", 10, quadratic_exactness},
      {3, "unbiasedness", 300, unbiasedness},
      {4, "variance-reduction magnitude", 300, variance_magnitude},
      {5, "late-iterate scale degradation", 300, late_scale_degradation},
      {6, "optimal-coefficient variance identity", 30, cv_identity},
      {7, "leave-one-out diagonal unbiasedness", 30, loo_unbiased},
      {8, "convergence ordering", 600, convergence_ordering},
      {9, "BNN scale check", 300, bnn_scale},
      {10, "determinism", 600, determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn(ctx);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::printf("criterion %2d %-40s %s  [%.1fs / %.0fs%s]  %s\n", c.id, c.title, pass ? "PASS" : "FAIL", secs,
                c.limit_seconds, in_time ? "" : " OVER TIME", out.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
