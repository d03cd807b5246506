#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "culsim/classifiers.hpp"
#include "culsim/corpus.hpp"
#include "culsim/feature_set.hpp"
#include "culsim/textrep.hpp"

namespace culsim {

inline constexpr int kBundleFormatVersion = 1;

/// Per-section fitted vectorizer plus classifier. Immutable once built.
class ExpertBundle {
 public:
  ExpertBundle(std::string section_id, VectorizerModel vectorizer, ClassifierModel classifier,
               std::vector<std::string> feature_codes, std::string training_digest,
               std::string created_at);

  const std::string& section_id() const noexcept { return section_id_; }
  const VectorizerModel& vectorizer() const noexcept { return vectorizer_; }
  const ClassifierModel& classifier() const noexcept { return classifier_; }
  /// Codes of the feature set this bundle scores, in label order.
  const std::vector<std::string>& feature_codes() const noexcept { return feature_codes_; }
  const std::string& training_digest() const noexcept { return training_digest_; }
  const std::string& created_at() const noexcept { return created_at_; }
  std::size_t k_labels() const noexcept { return classifier_.k_labels(); }

  /// tokenize -> transform -> predict.
  ScoreVector score(std::string_view text) const;

 private:
  std::string section_id_;
  VectorizerModel vectorizer_;
  ClassifierModel classifier_;
  std::vector<std::string> feature_codes_;
  std::string training_digest_;
  std::string created_at_;
};

using BundleSet = std::map<std::string, std::shared_ptr<const ExpertBundle>, std::less<>>;

/// Fits the section's vectorizer on its texts and the classifier on the
/// resulting vectors. Throws PreconditionError on an empty slice, examples
/// from another section, or a label arity that differs from `feature_set`.
ExpertBundle train_section(std::span<const AnnotatedExample> examples, const FeatureSet& feature_set,
                           const Hyperparameters& params, std::string created_at = {});

inline ScoreVector score_response(const ExpertBundle& bundle, std::string_view text) {
  return bundle.score(text);
}

/// Single JSON document; see docs for the schema. Doubles round-trip exactly.
std::string bundle_to_json(const ExpertBundle& bundle);
/// Throws BundleError(version) on an unknown format_version and
/// BundleError(corruption) on unparsable input or a checksum mismatch.
ExpertBundle bundle_from_json(std::string_view text);

void save_bundle(const ExpertBundle& bundle, const std::filesystem::path& path);
ExpertBundle load_bundle(const std::filesystem::path& path);

/// `<dir>/<section>.bundle.json`
std::filesystem::path bundle_path(const std::filesystem::path& dir, std::string_view section_id);

/// Loads every `*.bundle.json` in a directory, keyed by section id.
BundleSet load_bundle_dir(const std::filesystem::path& dir);

}  // namespace culsim
