#include "culsim/feedback.hpp"

#include "culsim/errors.hpp"

namespace culsim {

std::string join_phrases(std::span<const std::string> items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) {
      if (items.size() == 2) out += " and ";
      else if (i + 1 == items.size()) out += ", and ";
      else out += ", ";
    }
    out += items[i];
  }
  return out;
}

namespace {

void replace_all(std::string& text, std::string_view key, const std::string& value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
}

void check_arity(const FeatureSet& features, const LabelVector& score) {
  if (score.size() != features.size()) {
    throw PreconditionError("feedback: score has " + std::to_string(score.size()) +
                            " bits but section '" + features.section_id + "' has " +
                            std::to_string(features.size()) + " features");
  }
}

}  // namespace

std::string generate_feedback(const FeatureSet& features, const LabelVector& score,
                              const FeedbackTemplate& tmpl) {
  check_arity(features, score);
  std::vector<std::string> all, hits, misses;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features.features[i];
    all.push_back(f.description);
    if (score[i] != 0) hits.push_back(f.success_text());
    else misses.push_back(f.improvement_text());
  }

  std::string body = hits.empty() ? tmpl.all_missed : misses.empty() ? tmpl.all_success : tmpl.mixed;
  replace_all(body, "{success}", join_phrases(hits));
  replace_all(body, "{improve}", join_phrases(misses));
  std::string text = tmpl.preamble;
  replace_all(text, "{all}", join_phrases(all));
  text += body;

  if (!text.empty()) {
    char& lead = text.front();
    if (tmpl.lead == FeedbackTemplate::LeadCase::sentence && lead >= 'a' && lead <= 'z') {
      lead = static_cast<char>(lead - 'a' + 'A');
    } else if (tmpl.lead == FeedbackTemplate::LeadCase::quoted && lead >= 'A' && lead <= 'Z') {
      lead = static_cast<char>(lead - 'A' + 'a');
    }
  }
  return text;
}

std::map<std::string, ClauseRole> feedback_mentions(const FeatureSet& features,
                                                    const LabelVector& score) {
  check_arity(features, score);
  std::map<std::string, ClauseRole> roles;
  for (std::size_t i = 0; i < features.size(); ++i) {
    roles[features.features[i].code] = score[i] != 0 ? ClauseRole::success : ClauseRole::improvement;
  }
  return roles;
}

}  // namespace culsim
