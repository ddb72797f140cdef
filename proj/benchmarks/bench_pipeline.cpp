#include <benchmark/benchmark.h>

#include "sstkg/graph.hpp"
#include "sstkg/synthetic.hpp"
#include "sstkg/training.hpp"

using namespace sstkg;

namespace {

SyntheticWorld world(std::size_t entities) {
  SyntheticSpec spec;
  spec.entity_count = entities;
  return generate_synthetic(spec);
}

void BM_BuildGraph(benchmark::State& state) {
  const SyntheticWorld w = world(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_graph(w.entities, {}));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildGraph)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const Sstkg graph = build_graph(world(static_cast<std::size_t>(state.range(0))).entities, {});
  EmbeddingConfig config;
  config.epochs_embedding = 1;
  config.epochs_influence = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(graph, config));
  }
}
BENCHMARK(BM_TrainEpoch)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
