#include <benchmark/benchmark.h>

#include <random>

#include "hgkt/ot.hpp"

using namespace hgkt;
using namespace hgkt::ot;

namespace {

Histogram random_histogram(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = unit(rng);
  return Histogram::validated(v / v.sum());
}

}  // namespace

static void BM_SinkhornDistance(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const double eps = 1.0 / static_cast<double>(state.range(1));
  std::mt19937_64 rng(7);
  const auto a = random_histogram(rng, n);
  const auto b = random_histogram(rng, n);
  const auto C = default_cost_matrix(n);
  SinkhornConfig cfg;
  cfg.epsilon = eps;
  cfg.marginal_tol = 1e-6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sinkhorn_distance(a, b, C, cfg));
  }
}
BENCHMARK(BM_SinkhornDistance)
    ->Unit(benchmark::kMillisecond)
    ->Args({8, 100})
    ->Args({20, 100})
    ->Args({20, 100000})
    ->Args({64, 1000});

static void BM_WassersteinBarycenter(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int count = static_cast<int>(state.range(1));
  std::mt19937_64 rng(11);
  std::vector<Histogram> inputs;
  for (int s = 0; s < count; ++s) inputs.push_back(random_histogram(rng, n));
  const auto C = default_cost_matrix(n);
  SinkhornConfig cfg;
  cfg.epsilon = 1e-5;
  cfg.marginal_tol = 1e-6;
  const auto w = BarycenterWeights::uniform(count);
  for (auto _ : state) {
    benchmark::DoNotOptimize(wasserstein_barycenter(inputs, w, C, cfg));
  }
}
BENCHMARK(BM_WassersteinBarycenter)
    ->Unit(benchmark::kMillisecond)
    ->Args({20, 10})
    ->Args({20, 30});

static void BM_ExactOt1d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(13);
  const auto a = random_histogram(rng, n);
  const auto b = random_histogram(rng, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(exact_ot_1d(a, b));
  }
}
BENCHMARK(BM_ExactOt1d)->Arg(16)->Arg(256);
