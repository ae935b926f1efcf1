#include "mcvi/estimators.hpp"
#include "mcvi/models/bnn.hpp"
#include "mcvi/models/frisk.hpp"
#include "mcvi/optimize.hpp"

#include <benchmark/benchmark.h>

namespace {

const mcvi::FriskModel& frisk() {
  static const mcvi::FriskModel m(mcvi::generate_frisk_synthetic(3, 31, 0));
  return m;
}

const mcvi::BnnModel& bnn() {
  static const mcvi::BnnModel m(mcvi::generate_regression_synthetic(100, 11, 0));
  return m;
}

const mcvi::LogDensityModel& pick(int which) {
  if (which == 0) return frisk();
  return bnn();
}

// args: model (0 frisk, 1 bnn), estimator kind, L
void BM_GradientBatch(benchmark::State& state) {
  const auto& model = pick(static_cast<int>(state.range(0)));
  const auto kind = static_cast<mcvi::EstimatorKind>(state.range(1));
  const auto samples = static_cast<std::size_t>(state.range(2));
  const auto params = mcvi::initial_params(model.dim());
  std::uint64_t it = 0;
  for (auto _ : state) {
    const auto noise = mcvi::make_noise_batch(1, it++, samples, model.dim());
    benchmark::DoNotOptimize(mcvi::rv_rge_batch(model, params, noise, kind));
  }
  state.SetLabel(model.name() + "/" + mcvi::to_string(kind));
}

constexpr int kMC = static_cast<int>(mcvi::EstimatorKind::kMC);
constexpr int kLocal = static_cast<int>(mcvi::EstimatorKind::kHvpLocal);
constexpr int kFull = static_cast<int>(mcvi::EstimatorKind::kFullHessian);

BENCHMARK(BM_GradientBatch)
    ->Args({0, kMC, 10})
    ->Args({0, kFull, 10})
    ->Args({0, kLocal, 10})
    ->Args({1, kMC, 10})
    ->Args({1, kLocal, 10})
    ->Unit(benchmark::kMicrosecond);

// L Hessian-vector products at one point: reuse one prepared point, or
// rebuild the forward pass for every product.
void BM_HvpPrepared(benchmark::State& state) {
  const auto& model = pick(static_cast<int>(state.range(0)));
  const auto samples = static_cast<std::size_t>(state.range(1));
  const auto params = mcvi::initial_params(model.dim());
  const auto noise = mcvi::make_noise_batch(2, 0, samples, model.dim());
  for (auto _ : state) {
    const auto prep = model.prepare(params.mean);
    for (const auto& e : noise.eps) benchmark::DoNotOptimize(prep->hvp(e));
  }
  state.SetLabel(model.name());
}
BENCHMARK(BM_HvpPrepared)->Args({0, 10})->Args({1, 10})->Unit(benchmark::kMicrosecond);

void BM_HvpUnprepared(benchmark::State& state) {
  const auto& model = pick(static_cast<int>(state.range(0)));
  const auto samples = static_cast<std::size_t>(state.range(1));
  const auto params = mcvi::initial_params(model.dim());
  const auto noise = mcvi::make_noise_batch(2, 0, samples, model.dim());
  for (auto _ : state) {
    for (const auto& e : noise.eps) benchmark::DoNotOptimize(model.hvp(params.mean, e));
  }
  state.SetLabel(model.name());
}
BENCHMARK(BM_HvpUnprepared)->Args({0, 10})->Args({1, 10})->Unit(benchmark::kMicrosecond);

void BM_Elbo2000(benchmark::State& state) {
  const auto& model = pick(static_cast<int>(state.range(0)));
  const auto params = mcvi::initial_params(model.dim());
  std::uint64_t it = 0;
  for (auto _ : state) benchmark::DoNotOptimize(mcvi::estimate_elbo(model, params, 2000, 3, it++));
  state.SetLabel(model.name());
}
BENCHMARK(BM_Elbo2000)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
