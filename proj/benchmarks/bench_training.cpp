#include <benchmark/benchmark.h>

#include "bench_common.hpp"

namespace {

template <typename Params>
void BM_TrainSection(benchmark::State& state) {
  const auto examples = bench::slice();
  const auto registry = bench::scenario().feature_registry();
  const auto& fs = registry.at("s08");
  for (auto _ : state) {
    benchmark::DoNotOptimize(culsim::train_section(examples, fs, Params{}, "1970-01-01T00:00:00.000Z"));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * examples.size()));
}
BENCHMARK(BM_TrainSection<culsim::KnnParams>)->Name("train/knn")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainSection<culsim::RfParams>)->Name("train/rf")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainSection<culsim::MlpParams>)->Name("train/mlp")->Unit(benchmark::kMillisecond);

}  // namespace
