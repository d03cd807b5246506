#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "culsim/classifiers.hpp"
#include "culsim/feature_set.hpp"

namespace culsim {

/// Wording of the adaptive feedback paragraph. `{all}`, `{success}` and
/// `{improve}` are replaced by joined feature phrases.
struct FeedbackTemplate {
  enum class LeadCase {
    sentence,  // "A culturally appropriate ..."
    quoted,    // "a culturally appropriate ..." (as when quoted mid-sentence)
  };

  std::string preamble = "a culturally appropriate response in this section should include {all}. ";
  std::string mixed = "From your response, you succeeded in {success}, but your response could be "
                      "improved by {improve}.";
  std::string all_success = "From your response, you succeeded in {success}. Well done.";
  std::string all_missed = "Your response could be improved by {improve}.";
  LeadCase lead = LeadCase::sentence;
};

/// "a", "a and b", "a, b, and c".
std::string join_phrases(std::span<const std::string> items);

/// Preamble naming every feature, then a success and/or improvement clause
/// according to the score bits. Throws PreconditionError on an arity mismatch.
std::string generate_feedback(const FeatureSet& features, const LabelVector& score,
                              const FeedbackTemplate& tmpl = {});

enum class ClauseRole { success, improvement };

/// Which clause each feature code lands in.
std::map<std::string, ClauseRole> feedback_mentions(const FeatureSet& features,
                                                    const LabelVector& score);

}  // namespace culsim
