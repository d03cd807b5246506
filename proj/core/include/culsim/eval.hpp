#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "culsim/classifiers.hpp"
#include "culsim/corpus.hpp"
#include "culsim/expert.hpp"
#include "culsim/feature_set.hpp"
#include "culsim/stats.hpp"

namespace culsim {

/// Counted over individual label slots.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& other) noexcept;
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct PrfResult {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  ConfusionCounts counts;
};

/// Ratios from pooled counts: an empty precision or recall denominator gives
/// 1.0, and P + R = 0 gives F1 = 0.
PrfResult prf_from_counts(const ConfusionCounts& counts);

ConfusionCounts confusion_counts(std::span<const LabelVector> predictions,
                                 std::span<const LabelVector> truths);

PrfResult micro_prf(std::span<const ScoreVector> predictions, std::span<const ScoreVector> truths);
PrfResult micro_prf(std::span<const LabelVector> predictions, std::span<const LabelVector> truths);

/// Per participant, one ScoreVector per section in scenario order.
using ParticipantScores = std::vector<std::vector<ScoreVector>>;

/// Mean over participants of the fraction of the section's features hit.
double aggregate_avg_score(const ParticipantScores& scores, std::string_view section_id);
double aggregate_avg_score(std::span<const LabelVector> vectors);

/// Values are percentages.
struct ReportRow {
  std::string model_id;
  std::size_t feature_count = 0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double wer = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ColumnSummary {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double wer = 0.0;
};

struct MetricsReport {
  std::vector<ReportRow> rows;
  ColumnSummary mean;
  ColumnSummary std;
  /// F1 on WER. Absent when WER is constant across rows.
  std::optional<SimpleRegression> simple;
  /// F1 on (feature_count, WER). Absent when the design is rank deficient.
  std::optional<MultipleRegression> multiple;
};

/// Adds mean and sample-std rows and both regressions where defined.
/// Throws PreconditionError for fewer than 2 rows.
MetricsReport table2_report(std::vector<ReportRow> rows);

std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(std::string_view json);
/// Aligned text table, values rounded to one decimal.
std::string report_to_table(const MetricsReport& report);

/// Writes `<path>` (JSON) and `<path>.txt` (table).
void write_report(const std::filesystem::path& path, const MetricsReport& report);

// --- pipelines ------------------------------------------------------------------

using SectionHyperparameters = std::map<std::string, Hyperparameters, std::less<>>;

/// Hyperparameters recorded in each bundle, keyed by section.
SectionHyperparameters hyperparameters_of(const BundleSet& bundles);

/// Trains one bundle per section present in `train`.
BundleSet train_bundles(std::span<const AnnotatedExample> train, const FeatureRegistry& registry,
                        const SectionHyperparameters& params, const std::string& created_at = {});

struct SectionEvaluation {
  std::string section_id;
  std::size_t feature_count = 0;
  PrfResult prf;
  /// Mean per-utterance WER of the scored transcripts.
  double wer = 0.0;
};

struct EvaluationOptions {
  double simulate_wer = 0.0;
  std::uint64_t noise_seed = 0;
};

/// Scores every test example with its section's bundle, optionally after
/// corrupting the text. Sections follow the order of first appearance.
std::vector<SectionEvaluation> evaluate_sections(std::span<const AnnotatedExample> test,
                                                 const BundleSet& bundles,
                                                 const EvaluationOptions& options = {});

MetricsReport metrics_report(std::span<const SectionEvaluation> sections);

/// Splits the corpus, refits the given hyperparameters on the train side and
/// reports held-out scores.
MetricsReport evaluate_corpus(std::span<const AnnotatedExample> corpus, const FeatureRegistry& registry,
                              const SectionHyperparameters& params, double test_fraction,
                              std::uint64_t seed, const EvaluationOptions& options = {});

struct NoiseSweepOptions {
  std::vector<double> targets{0.0, 0.1, 0.2, 0.3, 0.5};
  std::size_t seeds = 10;
  std::uint64_t base_seed = 42;
};

struct NoiseCell {
  double target = 0.0;
  std::size_t seed_index = 0;
  std::vector<SectionEvaluation> sections;
  double mean_wer = 0.0;
  double mean_f1 = 0.0;
};

struct NoiseTargetSummary {
  double target = 0.0;
  double mean_wer = 0.0;
  double mean_f1 = 0.0;
};

struct NoiseSweepReport {
  std::vector<NoiseCell> cells;
  std::vector<NoiseTargetSummary> targets;
  /// Section F1 regressed on section WER over every (cell, section) point.
  std::optional<SimpleRegression> regression;
};

/// Bundles must come from the split's train side.
NoiseSweepReport noise_sweep(const CorpusSplit& split, const BundleSet& bundles,
                             const NoiseSweepOptions& options);

std::string noise_report_to_json(const NoiseSweepReport& report);
std::string noise_report_to_table(const NoiseSweepReport& report);
void write_noise_report(const std::filesystem::path& path, const NoiseSweepReport& report);

}  // namespace culsim
