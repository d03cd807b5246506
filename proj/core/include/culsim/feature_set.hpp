#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace culsim {

/// One abstracted cultural expectation scored at an evaluation point.
struct Feature {
  std::string code;         // short label, e.g. "A"
  std::string description;  // gerund phrase interpolated into feedback
  /// Optional clause overrides; empty means "use description".
  std::string success_phrase;
  std::string improvement_phrase;

  const std::string& success_text() const {
    return success_phrase.empty() ? description : success_phrase;
  }
  const std::string& improvement_text() const {
    return improvement_phrase.empty() ? description : improvement_phrase;
  }

  friend bool operator==(const Feature&, const Feature&) = default;
};

struct FeatureSet {
  std::string section_id;
  std::vector<Feature> features;

  std::size_t size() const noexcept { return features.size(); }

  /// Throws ScenarioError unless k >= 1, codes are unique and descriptions
  /// are non-empty.
  void validate() const;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

/// Section id -> feature set.
using FeatureRegistry = std::map<std::string, FeatureSet, std::less<>>;

}  // namespace culsim
