#include <doctest.h>

#include <cmath>

#include "culsim/errors.hpp"
#include "culsim/textrep.hpp"
#include "culsim/util.hpp"

using namespace culsim;

namespace {

VectorizerModel fit_texts(std::initializer_list<const char*> texts) {
  std::vector<Tokens> docs;
  for (const char* t : texts) docs.push_back(tokenize(t));
  return fit_vectorizer(docs);
}

}  // namespace

TEST_SUITE("textrep") {
  TEST_CASE("tokenizer lowercases and keeps apostrophes") {
    CHECK(tokenize("Good morning, Captain Wang!") == Tokens{"good", "morning", "captain", "wang"});
    CHECK(tokenize("It's an HONOR") == Tokens{"it's", "an", "honor"});
    CHECK(tokenize("  ...  ").empty());
    CHECK(tokenize("a1-b2") == Tokens{"a1", "b2"});
    // Bytes outside ASCII are word characters.
    CHECK(tokenize("caf\xc3\xa9 ok") == Tokens{"caf\xc3\xa9", "ok"});
  }

  TEST_CASE("idf and l2 weights match a hand computation") {
    // Two documents: "hello" occurs in both, "world" in one.
    // idf(hello) = ln(3/3) + 1 = 1, idf(world) = ln(3/2) + 1 = 1.405465.
    const auto model = fit_texts({"hello world", "hello"});
    CHECK(model.document_count() == 2);
    CHECK(model.dimension() == 2);
    CHECK(model.idf_of("hello") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(model.idf_of("world") == doctest::Approx(std::log(1.5) + 1.0).epsilon(1e-12));
    CHECK(model.idf_of("world") == doctest::Approx(1.4055).epsilon(1e-4));
    CHECK(model.idf_of("absent") == 0.0);

    const auto v = model.transform("Hello world");
    REQUIRE(v.entries.size() == 2);
    const auto dense = v.to_dense();
    const auto hello = model.vocabulary().at("hello");
    const auto world = model.vocabulary().at("world");
    CHECK(dense[hello] == doctest::Approx(0.5797).epsilon(1e-4));
    CHECK(dense[world] == doctest::Approx(0.8148).epsilon(1e-4));
    CHECK(v.norm() == doctest::Approx(1.0));
  }

  TEST_CASE("term counts are raw before normalization") {
    const auto model = fit_texts({"a b", "a"});
    const auto v = model.transform("a a b").to_dense();
    const double wa = 2.0 * 1.0;
    const double wb = 1.0 * (std::log(1.5) + 1.0);
    const double n = std::hypot(wa, wb);
    CHECK(v[model.vocabulary().at("a")] == doctest::Approx(wa / n));
    CHECK(v[model.vocabulary().at("b")] == doctest::Approx(wb / n));
  }

  TEST_CASE("vocabulary indices follow token order") {
    const auto model = fit_texts({"zebra apple mango"});
    CHECK(model.vocabulary().at("apple") == 0);
    CHECK(model.vocabulary().at("mango") == 1);
    CHECK(model.vocabulary().at("zebra") == 2);
  }

  TEST_CASE("out-of-vocabulary text maps to the zero vector") {
    const auto model = fit_texts({"hello world"});
    const auto v = model.transform("nothing known here");
    CHECK(v.is_zero());
    CHECK(v.dimension == model.dimension());
  }

  TEST_CASE("every non-zero transform has unit norm") {
    const auto model = fit_texts({"the quick brown fox", "jumps over the lazy dog", "brown dog"});
    const char* words[] = {"the", "quick", "brown", "fox", "jumps", "over", "lazy", "dog", "cat", "red"};
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
      std::string text;
      const auto n = rng.below(8);
      for (std::uint64_t i = 0; i < n; ++i) text += std::string(words[rng.below(10)]) + " ";
      const auto v = model.transform(text);
      if (v.is_zero()) continue;
      CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t i = 1; i < v.entries.size(); ++i) CHECK(v.entries[i - 1].index < v.entries[i].index);
    }
  }

  TEST_CASE("sparse dot agrees with the dense dot") {
    const auto model = fit_texts({"a b c", "b c d", "c d e"});
    const auto x = model.transform("a b c d");
    const auto y = model.transform("c d e e");
    const auto dx = x.to_dense(), dy = y.to_dense();
    double dense = 0.0;
    for (std::size_t i = 0; i < dx.size(); ++i) dense += dx[i] * dy[i];
    CHECK(x.dot(y) == doctest::Approx(dense).epsilon(1e-14));
  }

  TEST_CASE("fitting requires at least one token") {
    std::vector<Tokens> empty_docs{Tokens{}, Tokens{}};
    CHECK_THROWS_AS(fit_vectorizer(empty_docs), PreconditionError);
  }

  TEST_CASE("from_parts validates and reproduces a fitted model") {
    const auto model = fit_texts({"hello world", "hello"});
    const auto copy = VectorizerModel::from_parts(model.vocabulary(),
                                                  {model.idf().begin(), model.idf().end()},
                                                  model.document_count());
    CHECK(copy.transform("hello world") == model.transform("hello world"));
    CHECK_THROWS_AS(VectorizerModel::from_parts(model.vocabulary(), {1.0}, 2), PreconditionError);
    CHECK_THROWS_AS(VectorizerModel::from_parts(model.vocabulary(), {1.0, 0.5}, 2), PreconditionError);
  }
}
