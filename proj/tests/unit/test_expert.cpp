#include <doctest.h>

#include <json.hpp>

#include "culsim/errors.hpp"
#include "culsim/expert.hpp"
#include "fixtures.hpp"

using namespace culsim;
using culsim::testing::bundled_corpus;
using culsim::testing::bundled_scenario;
using culsim::testing::kPinnedTimestamp;
using nlohmann::json;

namespace {

ExpertBundle section_bundle(const std::string& section, const Hyperparameters& params) {
  const auto registry = bundled_scenario()->feature_registry();
  return train_section(select_section(bundled_corpus(), section), registry.at(section), params,
                       kPinnedTimestamp);
}

BundleError::Kind load_error_kind(const std::string& text) {
  try {
    bundle_from_json(text);
  } catch (const BundleError& e) {
    return e.kind();
  }
  FAIL("bundle loaded");
  return BundleError::Kind::io;
}

}  // namespace

TEST_SUITE("expert") {
  TEST_CASE("bundle round trip preserves predictions for every classifier kind") {
    MlpParams mlp;
    mlp.epochs = 50;
    for (const Hyperparameters& params : {Hyperparameters{KnnParams{}}, Hyperparameters{RfParams{}},
                                          Hyperparameters{mlp}}) {
      const auto bundle = section_bundle("s04", params);
      const auto text = bundle_to_json(bundle);
      const auto loaded = bundle_from_json(text);
      CHECK(bundle_to_json(loaded) == text);
      CHECK(loaded.feature_codes() == bundle.feature_codes());
      CHECK(loaded.created_at() == kPinnedTimestamp);
      for (const auto& ex : select_section(bundled_corpus(), "s04")) {
        CHECK(loaded.score(ex.text) == bundle.score(ex.text));
      }
      CHECK(loaded.score("completely unrelated words").bits.size() == bundle.k_labels());
    }
  }

  TEST_CASE("training is byte-for-byte reproducible") {
    CHECK(bundle_to_json(section_bundle("s08", RfParams{})) ==
          bundle_to_json(section_bundle("s08", RfParams{})));
  }

  TEST_CASE("tampering is detected as corruption") {
    const auto text = bundle_to_json(section_bundle("s02", KnnParams{}));
    auto j = json::parse(text);
    j["classifier"]["neighbors"] = 1;
    CHECK(load_error_kind(j.dump()) == BundleError::Kind::corruption);
    j = json::parse(text);
    j["training_digest"] = "0000000000000000";
    CHECK(load_error_kind(j.dump()) == BundleError::Kind::corruption);
    CHECK(load_error_kind(text.substr(0, text.size() / 2)) == BundleError::Kind::corruption);
    CHECK(load_error_kind("{}") == BundleError::Kind::corruption);

    j = json::parse(text);
    j["created_at"] = "2030-01-01T00:00:00.000Z";
    CHECK_NOTHROW(bundle_from_json(j.dump()));
  }

  TEST_CASE("unknown format versions are refused") {
    auto j = json::parse(bundle_to_json(section_bundle("s11", KnnParams{})));
    j["format_version"] = kBundleFormatVersion + 1;
    CHECK(load_error_kind(j.dump()) == BundleError::Kind::version);
    j["format_version"] = "1";
    CHECK(load_error_kind(j.dump()) == BundleError::Kind::version);
  }

  TEST_CASE("train_section preconditions") {
    const auto registry = bundled_scenario()->feature_registry();
    CHECK_THROWS_AS(train_section({}, registry.at("s01"), KnnParams{}), PreconditionError);
    const auto other = select_section(bundled_corpus(), "s02");
    CHECK_THROWS_AS(train_section(other, registry.at("s01"), KnnParams{}), PreconditionError);
    auto wrong = select_section(bundled_corpus(), "s01");
    wrong[0].labels.push_back(1);
    CHECK_THROWS_AS(train_section(wrong, registry.at("s01"), KnnParams{}), PreconditionError);
  }

  TEST_CASE("bundle directory io") {
    culsim::testing::TempDir dir;
    const auto a = section_bundle("s01", KnnParams{});
    const auto b = section_bundle("s03", KnnParams{});
    save_bundle(a, bundle_path(dir.path(), "s01"));
    save_bundle(b, bundle_path(dir.path(), "s03"));
    const auto set = load_bundle_dir(dir.path());
    REQUIRE(set.size() == 2);
    CHECK(bundle_to_json(*set.at("s03")) == bundle_to_json(b));
    try {
      load_bundle(dir / "missing.bundle.json");
      FAIL("loaded a missing file");
    } catch (const BundleError& e) {
      CHECK(e.kind() == BundleError::Kind::io);
    }
    CHECK_THROWS_AS(load_bundle_dir(dir / "nope"), BundleError);
  }

  TEST_CASE("model validation reports missing and mismatched sections") {
    const auto& scenario = *bundled_scenario();
    BundleSet set;
    set.emplace("s01", std::make_shared<const ExpertBundle>(section_bundle("s01", KnnParams{})));
    // s02 has three features; a two-label bundle under its name is an arity mismatch.
    const auto s05 = section_bundle("s05", KnnParams{});
    set.emplace("s02", std::make_shared<const ExpertBundle>(s05));
    const auto problems = validate_against_models(scenario, set);
    CHECK(problems.size() == 13);
    bool saw_arity = false;
    for (const auto& p : problems) {
      if (p.kind == ModelMismatch::Kind::arity_mismatch) {
        saw_arity = true;
        CHECK(p.section_id == "s02");
        CHECK(p.expected == 3);
        CHECK(p.actual == 2);
      }
      CHECK(p.section_id != "s01");
    }
    CHECK(saw_arity);
    CHECK(validate_against_models(scenario, *culsim::testing::rf_bundles()).empty());
  }
}
