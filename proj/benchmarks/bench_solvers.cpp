#include <benchmark/benchmark.h>

#include <edgemarket/baselines.hpp>
#include <edgemarket/dynamics.hpp>
#include <edgemarket/eg_core.hpp>
#include <edgemarket/netprofit.hpp>
#include <edgemarket/projection.hpp>
#include <edgemarket/scenario.hpp>

#include "test_support.hpp"

namespace {

using namespace edgemarket;

MarketInstance generated(int n_services, int n_ens) {
  GenerationConfig config;
  config.n_services = n_services;
  config.n_ens = n_ens;
  return build_instance(generate(config, 1)).instance;
}

void BM_SolveEg(benchmark::State& state) {
  const auto inst = generated(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_eg(inst));
}
BENCHMARK(BM_SolveEg)->Args({4, 8})->Args({10, 20})->Args({40, 80})->Unit(benchmark::kMicrosecond);

void BM_SolveEgProjectedGradient(benchmark::State& state) {
  const auto inst = generated(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  EgOptions opts;
  opts.engine = EgEngine::projected_gradient;
  for (auto _ : state) benchmark::DoNotOptimize(solve_eg(inst, opts));
}
BENCHMARK(BM_SolveEgProjectedGradient)->Args({4, 8})->Args({10, 20})->Unit(benchmark::kMicrosecond);

void BM_PropDynStep(benchmark::State& state) {
  const auto inst = generated(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  BidMatrix bids = uniform_bids(inst);
  for (auto _ : state) {
    bids = propdyn_step(inst, bids);
    benchmark::DoNotOptimize(bids.b.data());
  }
}
BENCHMARK(BM_PropDynStep)->Args({10, 20})->Args({100, 200});

void BM_PropDynRun(benchmark::State& state) {
  const auto inst = testsupport::load("base_case.json");
  PropDynOptions opts;
  opts.tol = 1e-4;
  for (auto _ : state) benchmark::DoNotOptimize(propdyn_run(inst, opts));
}
BENCHMARK(BM_PropDynRun)->Unit(benchmark::kMicrosecond);

void BM_CesWorkedExample(benchmark::State& state) {
  const auto inst = testsupport::six();
  for (auto _ : state) benchmark::DoNotOptimize(ces_dual_decomposition(inst));
}
BENCHMARK(BM_CesWorkedExample)->Unit(benchmark::kMillisecond);

void BM_PropBrGolden(benchmark::State& state) {
  const auto inst = testsupport::load("golden_10x20.json");
  for (auto _ : state) benchmark::DoNotOptimize(propbr_run(inst));
}
BENCHMARK(BM_PropBrGolden)->Unit(benchmark::kMillisecond);

void BM_NetProfit(benchmark::State& state) {
  const auto inst = testsupport::load("base_case.json");
  const auto scaled = inst.with_budgets(inst.budgets() * static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_netprofit(scaled));
}
BENCHMARK(BM_NetProfit)->Arg(1)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_MaxMin(benchmark::State& state) {
  const auto inst = testsupport::load("base_case.json");
  for (auto _ : state) benchmark::DoNotOptimize(maxmin_allocation(inst));
}
BENCHMARK(BM_MaxMin)->Unit(benchmark::kMillisecond);

void BM_ProjectCappedSimplex(benchmark::State& state) {
  std::mt19937_64 rng(3);
  Eigen::VectorXd v(state.range(0));
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = testsupport::uniform(rng, -0.5, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(project_capped_simplex(v));
}
BENCHMARK(BM_ProjectCappedSimplex)->Arg(16)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
