#include <doctest.h>

#include "culsim/errors.hpp"
#include "culsim/eval.hpp"
#include "fixtures.hpp"

using namespace culsim;
using culsim::testing::bundled_corpus;
using culsim::testing::bundled_scenario;

TEST_SUITE("eval") {
  TEST_CASE("micro precision recall and F1 from pooled slots") {
    // 8 TP, 2 FP, 1 FN, 1 TN spread over three vectors.
    const std::vector<LabelVector> pred{{1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 0, 0}};
    const std::vector<LabelVector> truth{{1, 1, 1, 1}, {1, 1, 0, 0}, {1, 1, 1, 0}};
    const auto r = micro_prf(std::span<const LabelVector>(pred), std::span<const LabelVector>(truth));
    CHECK(r.counts == ConfusionCounts{8, 2, 1, 1});
    CHECK(r.precision == doctest::Approx(0.8));
    CHECK(r.recall == doctest::Approx(8.0 / 9.0));
    CHECK(r.f1 == doctest::Approx(0.8421052631578947));

    std::vector<ScoreVector> sp, st;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      sp.push_back({"s", pred[i]});
      st.push_back({"s", truth[i]});
    }
    CHECK(micro_prf(std::span<const ScoreVector>(sp), std::span<const ScoreVector>(st)).f1 == r.f1);
    st[0].section_id = "other";
    CHECK_THROWS_AS(micro_prf(std::span<const ScoreVector>(sp), std::span<const ScoreVector>(st)),
                    PreconditionError);
  }

  TEST_CASE("empty denominators") {
    auto r = prf_from_counts({0, 0, 0, 5});
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
    r = prf_from_counts({0, 3, 2, 0});
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
    r = prf_from_counts({0, 0, 4, 0});
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
    const std::vector<LabelVector> a{{1, 0}}, b{{1}};
    CHECK_THROWS_AS(confusion_counts(a, b), PreconditionError);
  }

  TEST_CASE("aggregate score averages per-participant hit fractions") {
    const ParticipantScores scores{
        {{"s01", {1, 0, 0}}, {"s02", {1, 1}}},
        {{"s01", {1, 1, 1}}, {"s02", {0, 0}}},
    };
    CHECK(aggregate_avg_score(scores, "s01") == doctest::Approx((1.0 / 3 + 1.0) / 2));
    CHECK(aggregate_avg_score(scores, "s02") == doctest::Approx(0.5));
    CHECK_THROWS_AS(aggregate_avg_score(scores, "s09"), PreconditionError);
  }

  TEST_CASE("table summary rows and regressions") {
    std::vector<ReportRow> rows{{"1", 3, 70, 80, 62, 30}, {"2", 2, 80, 82, 78, 20},
                                {"3", 4, 90, 91, 89, 10}, {"4", 1, 85, 80, 90, 12},
                                {"5", 3, 75, 70, 81, 25}};
    const auto report = table2_report(rows);
    CHECK(report.mean.f1 == doctest::Approx(80.0));
    CHECK(report.std.f1 == doctest::Approx(std::sqrt(250.0 / 4.0)));
    REQUIRE(report.simple.has_value());
    CHECK(report.simple->slope < 0);
    REQUIRE(report.multiple.has_value());
    CHECK(report.multiple->df2 == 2.0);

    const auto back = report_from_json(report_to_json(report));
    CHECK(back.rows == report.rows);
    CHECK(back.mean.recall == report.mean.recall);
    CHECK(back.multiple->f_stat == report.multiple->f_stat);
    CHECK(report_to_json(back) == report_to_json(report));

    const auto table = report_to_table(report);
    CHECK(table.find("Mean") != std::string::npos);
    CHECK(table.find("Std. Deviation") != std::string::npos);
    CHECK(table.find("80.0") != std::string::npos);

    CHECK_THROWS_AS(table2_report({rows[0]}), PreconditionError);
    for (auto& r : rows) r.wer = 15;
    const auto flat = table2_report(rows);
    CHECK_FALSE(flat.simple.has_value());
    CHECK_FALSE(flat.multiple.has_value());
  }

  TEST_CASE("held-out evaluation over the bundled corpus") {
    const auto registry = bundled_scenario()->feature_registry();
    SectionHyperparameters params;
    for (const auto& [section, fs] : registry) params.emplace(section, KnnParams{});
    const auto report = evaluate_corpus(bundled_corpus(), registry, params, 0.2, 42);
    REQUIRE(report.rows.size() == 14);
    for (const auto& r : report.rows) {
      CHECK(r.feature_count == registry.at(r.model_id).size());
      CHECK(r.f1 >= 0.0);
      CHECK(r.f1 <= 100.0);
      CHECK(r.wer == 0.0);
    }
    CHECK(report_to_json(evaluate_corpus(bundled_corpus(), registry, params, 0.2, 42)) ==
          report_to_json(report));

    const auto noisy = evaluate_corpus(bundled_corpus(), registry, params, 0.2, 42, {0.3, 7});
    CHECK(noisy.mean.wer > 20.0);
    CHECK(noisy.mean.wer < 40.0);
  }

  TEST_CASE("noise sweep shape") {
    const auto registry = bundled_scenario()->feature_registry();
    const auto split = split_corpus(bundled_corpus(), 0.2, 42);
    SectionHyperparameters params;
    for (const auto& [section, fs] : registry) params.emplace(section, KnnParams{});
    const auto bundles = train_bundles(split.train, registry, params, culsim::testing::kPinnedTimestamp);
    NoiseSweepOptions opt;
    opt.targets = {0.0, 0.3};
    opt.seeds = 2;
    const auto report = noise_sweep(split, bundles, opt);
    CHECK(report.cells.size() == 4);
    REQUIRE(report.targets.size() == 2);
    CHECK(report.targets[0].mean_wer == 0.0);
    CHECK(report.targets[1].mean_wer > 0.2);
    CHECK(report.targets[1].mean_f1 < report.targets[0].mean_f1);
    REQUIRE(report.regression.has_value());
    CHECK(report.regression->n == 4 * 14);
    CHECK(noise_report_to_json(noise_sweep(split, bundles, opt)) == noise_report_to_json(report));
  }
}
