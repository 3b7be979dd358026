#include <benchmark/benchmark.h>

#include <random>

#include "hgkt/dataset.hpp"
#include "hgkt/zsl.hpp"

using namespace hgkt;

static void BM_TrainEpochs(benchmark::State& state) {
  data::SynthSpec spec;
  spec.num_classes = 10;
  spec.num_unseen = 2;
  spec.instances_per_class = 30;
  spec.feature_dim = 20;
  spec.attribute_dim = 10;
  spec.seed = 3;
  const auto view = data::densify(data::synth_generate(spec));
  graph::GraphConfig gcfg;
  gcfg.sinkhorn.epsilon = 1e-3;
  const auto g = graph::build_graph(view.train, view.seen_prototypes, gcfg);
  gnn::TrainConfig cfg;
  cfg.hidden_dim = 64;
  cfg.epochs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gnn::train(g, view.train, view.seen_prototypes, cfg));
  }
}
BENCHMARK(BM_TrainEpochs)->Unit(benchmark::kMillisecond)->Arg(100)->Arg(500);

static void BM_EmbedUnseen(benchmark::State& state) {
  data::SynthSpec spec;
  spec.num_classes = 10;
  spec.num_unseen = 2;
  spec.seed = 3;
  const auto view = data::densify(data::synth_generate(spec));
  zsl::PipelineConfig cfg;
  cfg.graph.sinkhorn.epsilon = 1e-3;
  cfg.train.hidden_dim = 64;
  cfg.train.epochs = 50;
  const auto model =
      zsl::fit_pipeline(view.train, view.seen_prototypes, view.unseen, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(zsl::embed_unseen(view.unseen[0], model.graph,
                                               model.states, view.seen_prototypes,
                                               model.params, cfg.train, 2));
  }
}
BENCHMARK(BM_EmbedUnseen);

BENCHMARK_MAIN();
