#include <benchmark/benchmark.h>

#include <random>

#include "hgkt/hgraph.hpp"

using namespace hgkt;
using namespace hgkt::graph;

namespace {

struct Data {
  std::vector<InstanceRecord> instances;
  std::vector<ClassPrototype> prototypes;
};

Data make_data(int num_classes, int per_class, int dim) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Data d;
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      InstanceRecord rec;
      rec.id = static_cast<int>(d.instances.size());
      rec.label = c;
      rec.feature.resize(dim);
      for (int j = 0; j < dim; ++j) rec.feature(j) = unit(rng);
      d.instances.push_back(std::move(rec));
    }
    ClassPrototype p;
    p.class_id = c;
    p.attributes = Vector::Constant(4, c);
    d.prototypes.push_back(std::move(p));
  }
  return d;
}

}  // namespace

static void BM_BuildGraph(benchmark::State& state) {
  const auto data = make_data(static_cast<int>(state.range(0)),
                              static_cast<int>(state.range(1)), 20);
  GraphConfig cfg;
  cfg.sinkhorn.epsilon = 1e-3;
  cfg.sinkhorn.marginal_tol = 1e-6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_graph(data.instances, data.prototypes, cfg));
  }
}
BENCHMARK(BM_BuildGraph)->Unit(benchmark::kMillisecond)->Args({5, 10})->Args({10, 30});

static void BM_ClassBarycenter(benchmark::State& state) {
  const auto data = make_data(1, static_cast<int>(state.range(0)), 20);
  GraphConfig cfg;
  cfg.sinkhorn.epsilon = 1e-5;
  cfg.sinkhorn.marginal_tol = 1e-6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(class_barycenter(data.instances, cfg));
  }
}
BENCHMARK(BM_ClassBarycenter)->Unit(benchmark::kMillisecond)->Arg(10)->Arg(30);
