// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "genscale/backtest.hpp"
#include "genscale/synth.hpp"

using namespace genscale;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

const std::vector<Observation>& noisy_observations() {
  static const auto obs = law_observations(ComputeLawParams(2, 1e3, 0.12),
                                           diagonal_grid(20, 1.4e7, 1.2e10, 3e9, 3e11), {}, 0.02, 1);
  return obs;
}

void BM_FitMultiStart(benchmark::State& state) {
  FitConfig cfg;
  cfg.n_starts = 64;
  cfg.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(fit(noisy_observations(), {LawFamily::compute, 1}, cfg));
}

void BM_BacktestCaps(benchmark::State& state) {
  const auto& obs = noisy_observations();
  std::vector<BacktestInput> in;
  for (std::size_t i = 0; i < obs.size(); ++i) in.push_back({"m" + std::to_string(i), obs[i].covariates[0], obs[i]});
  FitConfig cfg;
  cfg.n_starts = 16;
  for (auto _ : state)
    benchmark::DoNotOptimize(backtest(in, {LawFamily::compute, 1}, cfg, std::nullopt, exec_of(state)));
}

void BM_SynthCorpus(benchmark::State& state) {
  SynthSpec spec;
  spec.ground_truth = ComputeLawParams(1.0, 1e3, 0.12);
  spec.model_grid = diagonal_grid(16, 1.4e7, 1.2e10, 3e9, 3e11);
  spec.n_problems = 256;
  spec.samples_per_problem = std::int64_t{10000};
  for (auto _ : state) benchmark::DoNotOptimize(heterogeneous_difficulty_corpus(spec, 0.3, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_FitMultiStart)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BacktestCaps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SynthCorpus)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
