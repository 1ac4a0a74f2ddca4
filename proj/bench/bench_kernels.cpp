#include <benchmark/benchmark.h>

#include <omp.h>

#include "sir/generator.hpp"
#include "sir/kernels.hpp"
#include "sir/standardize.hpp"

namespace {

struct Workload {
  sir::PreparedDataset prepared;
  sir::RankerModel model;
};

const Workload& workload() {
  static const Workload w = [] {
    sir::GeneratorConfig gc;
    gc.num_queries = 1000;
    auto data = sir::generate(gc);
    auto stats = sir::fit_standardization(data.dataset, data.schema);
    return Workload{sir::apply_standardization(data.dataset, data.schema, stats),
                    sir::RankerModel(data.schema, sir::ModelConfig{}, 1)};
  }();
  return w;
}

void BM_ScoreSerial(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) benchmark::DoNotOptimize(sir::kernels::score_dataset_serial(w.model, w.prepared));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.prepared.size()));
}

void BM_ScoreParallel(benchmark::State& state) {
  const auto& w = workload();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sir::kernels::score_dataset_parallel(w.model, w.prepared));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.prepared.size()));
}

void BM_NdcgSerial(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) benchmark::DoNotOptimize(sir::kernels::ndcg_per_query_serial(w.model, w.prepared));
}

void BM_NdcgParallel(benchmark::State& state) {
  const auto& w = workload();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sir::kernels::ndcg_per_query_parallel(w.model, w.prepared));
}

}  // namespace

BENCHMARK(BM_ScoreSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NdcgSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NdcgParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
