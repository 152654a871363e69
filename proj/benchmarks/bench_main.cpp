#include <benchmark/benchmark.h>

#include "steinlab/bayes_shrinkage.hpp"
#include "steinlab/risk_lab.hpp"
#include "steinlab/rng.hpp"

using namespace steinlab;

static void BM_PhiloxBlock(benchmark::State& state) {
  std::array<std::uint32_t, 4> ctr{0, 0, 0, 0};
  for (auto _ : state) {
    ++ctr[0];
    benchmark::DoNotOptimize(philox4x32(ctr, {1, 2}));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhiloxBlock);

static void BM_NormalDraws(benchmark::State& state) {
  ReplicateStream s(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(s.normal());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_NormalDraws);

// Replicates per second for the unknown-scale James-Stein estimator.
static void BM_McRisk(benchmark::State& state) {
  const auto model = student_t_model(5.0, Eigen::VectorXd::Zero(state.range(0)), 1.0, 4);
  const EstimatorSpec js{estimator::JsUnknown{state.range(0) - 2.0}, std::nullopt};
  const std::uint64_t n = 50000;
  for (auto _ : state) benchmark::DoNotOptimize(mc_risk(model, js, n, 1, ExecutionPolicy{1}));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_McRisk)->Arg(6)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_BayesR(benchmark::State& state) {
  BayesPriorSpec prior;
  prior.b_prior = 4.0;
  prior.p = 6;
  prior.k = 4;
  const double w = std::pow(10.0, static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bayes_r(prior, w));
}
BENCHMARK(BM_BayesR)->DenseRange(-3, 6, 3);
BENCHMARK_MAIN();
