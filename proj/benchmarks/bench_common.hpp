#pragma once

#include <filesystem>
#include <memory>

#include "culsim/corpus.hpp"
#include "culsim/expert.hpp"
#include "culsim/scenario.hpp"

namespace bench {

inline const culsim::Scenario& scenario() {
  static const auto s = culsim::load_scenario(std::filesystem::path(CULSIM_BENCH_DATA_DIR) / "scenarios" / "dme.json");
  return s;
}

inline const std::vector<culsim::AnnotatedExample>& corpus() {
  static const auto c = culsim::load_corpus(std::filesystem::path(CULSIM_BENCH_DATA_DIR) / "corpus" / "dme_corpus.jsonl",
                                            scenario().feature_registry());
  return c;
}

// s08 has the most features.
inline std::vector<culsim::AnnotatedExample> slice(const char* section = "s08") {
  return culsim::select_section(corpus(), section);
}

}  // namespace bench
