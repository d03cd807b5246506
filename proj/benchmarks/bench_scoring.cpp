#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "culsim/asr.hpp"

namespace {

const char* kUtterance = "Captain Wang, would you be willing to share the supply routes with our team?";

template <typename Params>
void BM_ScoreResponse(benchmark::State& state) {
  const auto examples = bench::slice();
  const auto bundle = culsim::train_section(examples, bench::scenario().feature_registry().at("s08"), Params{},
                                            "1970-01-01T00:00:00.000Z");
  for (auto _ : state) benchmark::DoNotOptimize(culsim::score_response(bundle, kUtterance));
}
BENCHMARK(BM_ScoreResponse<culsim::KnnParams>)->Name("score/knn");
BENCHMARK(BM_ScoreResponse<culsim::RfParams>)->Name("score/rf");
BENCHMARK(BM_ScoreResponse<culsim::MlpParams>)->Name("score/mlp");

void BM_Transform(benchmark::State& state) {
  std::vector<culsim::Tokens> docs;
  for (const auto& ex : bench::slice()) docs.push_back(culsim::tokenize(ex.text));
  const auto vec = culsim::fit_vectorizer(docs);
  for (auto _ : state) benchmark::DoNotOptimize(vec.transform(kUtterance));
}
BENCHMARK(BM_Transform)->Name("tfidf/transform");

void BM_Wer(benchmark::State& state) {
  const auto noisy = culsim::corrupt(kUtterance, 0.3, 1).transcript;
  for (auto _ : state) benchmark::DoNotOptimize(culsim::wer(kUtterance, noisy));
}
BENCHMARK(BM_Wer)->Name("asr/wer");

void BM_Corrupt(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(culsim::corrupt(kUtterance, 0.3, seed++));
}
BENCHMARK(BM_Corrupt)->Name("asr/corrupt");

}  // namespace
