#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <unistd.h>

#include "culsim/corpus.hpp"
#include "culsim/expert.hpp"
#include "culsim/scenario.hpp"
#include "culsim/util.hpp"

namespace culsim::testing {

inline std::filesystem::path data_dir() { return CULSIM_TEST_DATA_DIR; }
inline std::filesystem::path scenario_path() { return data_dir() / "scenarios" / "dme.json"; }
inline std::filesystem::path corpus_path() { return data_dir() / "corpus" / "dme_corpus.jsonl"; }
inline std::filesystem::path templates_path() { return data_dir() / "corpus" / "templates.json"; }
inline std::filesystem::path script_path() { return data_dir() / "scripts" / "reference_session.txt"; }

inline constexpr const char* kPinnedTimestamp = "2026-01-01T00:00:00.000Z";

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("culsim-test-" + to_hex(derive_seed(static_cast<std::uint64_t>(::getpid()),
                                                 static_cast<std::uint64_t>(counter++))));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::shared_ptr<const Scenario> bundled_scenario() {
  static const auto scenario = std::make_shared<const Scenario>(load_scenario(scenario_path()));
  return scenario;
}

inline const std::vector<AnnotatedExample>& bundled_corpus() {
  static const auto corpus = load_corpus(corpus_path(), bundled_scenario()->feature_registry());
  return corpus;
}

/// One bundle per evaluation point, trained on the whole bundled corpus.
inline std::shared_ptr<const BundleSet> trained_bundles(const Hyperparameters& params) {
  const auto registry = bundled_scenario()->feature_registry();
  auto bundles = std::make_shared<BundleSet>();
  for (const auto& [section, fs] : registry) {
    const auto slice = select_section(bundled_corpus(), section);
    bundles->emplace(section, std::make_shared<const ExpertBundle>(
                                  train_section(slice, fs, params, kPinnedTimestamp)));
  }
  return bundles;
}

inline std::shared_ptr<const BundleSet> rf_bundles() {
  static const auto bundles = trained_bundles(RfParams{});
  return bundles;
}

}  // namespace culsim::testing
