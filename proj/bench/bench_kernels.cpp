#include <benchmark/benchmark.h>

#include "ehalloc/harness.hpp"
#include "ehalloc/policies.hpp"

using namespace ehalloc;

namespace {

ExperimentConfig sweep(const std::string& policy) {
  ExperimentConfig config;
  config.n = 16;
  config.s = 4;
  config.p_grid = {0.2, 0.5, 0.8};
  config.trials = 40;
  config.master_seed = 7;
  config.policies = {PolicySpec::parse(policy)};
  return config;
}

void BM_SweepSerial(benchmark::State& state) {
  const ExperimentConfig config = sweep("optimal");
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment_serial(config));
}

void BM_SweepParallel(benchmark::State& state) {
  const ExperimentConfig config = sweep("optimal");
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(config, jobs));
}

void BM_Policy(benchmark::State& state, const char* policy) {
  const ExperimentConfig config = sweep(policy);
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment_serial(config));
}

}  // namespace

BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Policy, optimal, "optimal")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Policy, relaxed, "relaxed")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Policy, greedy, "greedy")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Policy, upper_2, "upper-2")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Policy, upper_n, "upper-n")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
