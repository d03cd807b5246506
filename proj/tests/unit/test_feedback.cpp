#include <doctest.h>

#include "culsim/errors.hpp"
#include "culsim/feedback.hpp"
#include "culsim/util.hpp"
#include "fixtures.hpp"

using namespace culsim;

namespace {

const FeatureSet& greeting() { return culsim::testing::bundled_scenario()->evaluation_points()[0]->feature_set; }

FeatureSet abstract_set(std::size_t k) {
  FeatureSet fs{"x", {}};
  for (std::size_t i = 0; i < k; ++i) {
    fs.features.push_back({std::string(1, static_cast<char>('A' + i)), "doing thing " + std::to_string(i), "", ""});
  }
  return fs;
}

}  // namespace

TEST_SUITE("feedback") {
  TEST_CASE("greeting section with only the greeting hit") {
    FeedbackTemplate quoted;
    quoted.lead = FeedbackTemplate::LeadCase::quoted;
    const std::string golden =
        "a culturally appropriate response in this section should include greeting the officer, "
        "avoiding asking about the officer's welfare on a first meeting, and using an honorific "
        "expression. From your response, you succeeded in greeting the officer, but your response "
        "could be improved by avoiding asking about the officer's welfare on a first meeting and "
        "using an honorific expression.";
    CHECK(generate_feedback(greeting(), {1, 0, 0}, quoted) == golden);
    const auto sentence = generate_feedback(greeting(), {1, 0, 0});
    CHECK(sentence[0] == 'A');
    CHECK(sentence.substr(1) == golden.substr(1));
  }

  TEST_CASE("all hit and all missed variants") {
    const auto fs = abstract_set(2);
    CHECK(generate_feedback(fs, {1, 1}) ==
          "A culturally appropriate response in this section should include doing thing 0 and doing "
          "thing 1. From your response, you succeeded in doing thing 0 and doing thing 1. Well done.");
    CHECK(generate_feedback(fs, {0, 0}) ==
          "A culturally appropriate response in this section should include doing thing 0 and doing "
          "thing 1. Your response could be improved by doing thing 0 and doing thing 1.");
    CHECK_THROWS_AS(generate_feedback(fs, {1}), PreconditionError);
  }

  TEST_CASE("phrase joining") {
    CHECK(join_phrases(std::vector<std::string>{}).empty());
    CHECK(join_phrases(std::vector<std::string>{"a"}) == "a");
    CHECK(join_phrases(std::vector<std::string>{"a", "b"}) == "a and b");
    CHECK(join_phrases(std::vector<std::string>{"a", "b", "c"}) == "a, b, and c");
    CHECK(join_phrases(std::vector<std::string>{"a", "b", "c", "d"}) == "a, b, c, and d");
  }

  TEST_CASE("clause overrides replace the description") {
    auto fs = abstract_set(2);
    fs.features[0].success_phrase = "greeting warmly";
    fs.features[1].improvement_phrase = "adding a title";
    const auto text = generate_feedback(fs, {1, 0});
    CHECK(text.find("succeeded in greeting warmly,") != std::string::npos);
    CHECK(text.find("improved by adding a title.") != std::string::npos);
  }

  TEST_CASE("every feature lands in exactly the clause its bit selects") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
      const auto k = 1 + static_cast<std::size_t>(rng.below(5));
      const auto fs = abstract_set(k);
      LabelVector bits(k);
      for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
      const auto mentions = feedback_mentions(fs, bits);
      REQUIRE(mentions.size() == k);
      const auto text = generate_feedback(fs, bits);
      const auto success_at = text.find("succeeded in");
      const auto improve_at = text.find("improved by");
      for (std::size_t i = 0; i < k; ++i) {
        const auto role = mentions.at(fs.features[i].code);
        CHECK((role == ClauseRole::success) == (bits[i] == 1));
        const auto& phrase = fs.features[i].description;
        // Mentioned once in the preamble and once in its clause.
        const auto first = text.find(phrase);
        const auto second = text.find(phrase, first + 1);
        REQUIRE(second != std::string::npos);
        if (role == ClauseRole::success) {
          CHECK(second > success_at);
          CHECK(second < improve_at);
        } else {
          CHECK(second > improve_at);
        }
      }
    }
  }
}
