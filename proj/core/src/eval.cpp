#include "culsim/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "culsim/asr.hpp"
#include "culsim/errors.hpp"
#include "culsim/util.hpp"
#include "json_io.hpp"

namespace culsim {

using nlohmann::json;

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) noexcept {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

PrfResult prf_from_counts(const ConfusionCounts& c) {
  PrfResult r;
  r.counts = c;
  r.precision = (c.tp + c.fp) == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  r.recall = (c.tp + c.fn) == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double denom = r.precision + r.recall;
  r.f1 = denom == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / denom;
  return r;
}

ConfusionCounts confusion_counts(std::span<const LabelVector> predictions,
                                 std::span<const LabelVector> truths) {
  if (predictions.size() != truths.size()) {
    throw PreconditionError("micro_prf: " + std::to_string(predictions.size()) + " predictions for " +
                            std::to_string(truths.size()) + " truths");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (predictions[i].size() != truths[i].size()) {
      throw PreconditionError("micro_prf: arity mismatch at item " + std::to_string(i));
    }
    for (std::size_t j = 0; j < truths[i].size(); ++j) {
      const bool p = predictions[i][j] != 0;
      const bool t = truths[i][j] != 0;
      if (p && t) ++c.tp;
      else if (p) ++c.fp;
      else if (t) ++c.fn;
      else ++c.tn;
    }
  }
  return c;
}

PrfResult micro_prf(std::span<const LabelVector> predictions, std::span<const LabelVector> truths) {
  return prf_from_counts(confusion_counts(predictions, truths));
}

PrfResult micro_prf(std::span<const ScoreVector> predictions, std::span<const ScoreVector> truths) {
  std::vector<LabelVector> p, t;
  p.reserve(predictions.size());
  t.reserve(truths.size());
  for (std::size_t i = 0; i < std::min(predictions.size(), truths.size()); ++i) {
    if (predictions[i].section_id != truths[i].section_id) {
      throw PreconditionError("micro_prf: item " + std::to_string(i) + " pairs section '" +
                              predictions[i].section_id + "' with '" + truths[i].section_id + "'");
    }
  }
  for (const auto& s : predictions) p.push_back(s.bits);
  for (const auto& s : truths) t.push_back(s.bits);
  return micro_prf(std::span<const LabelVector>(p), std::span<const LabelVector>(t));
}

double aggregate_avg_score(std::span<const LabelVector> vectors) {
  if (vectors.empty()) throw PreconditionError("aggregate_avg_score: no participants");
  double total = 0.0;
  for (const auto& v : vectors) {
    if (v.empty()) throw PreconditionError("aggregate_avg_score: empty score vector");
    std::size_t hits = 0;
    for (auto b : v) hits += b != 0 ? 1 : 0;
    total += static_cast<double>(hits) / static_cast<double>(v.size());
  }
  return total / static_cast<double>(vectors.size());
}

double aggregate_avg_score(const ParticipantScores& scores, std::string_view section_id) {
  if (scores.empty()) throw PreconditionError("aggregate_avg_score: no participants");
  std::vector<LabelVector> vectors;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    auto it = std::find_if(scores[j].begin(), scores[j].end(),
                           [&](const ScoreVector& s) { return s.section_id == section_id; });
    if (it == scores[j].end()) {
      throw PreconditionError("aggregate_avg_score: participant " + std::to_string(j) +
                              " has no score for section '" + std::string(section_id) + "'");
    }
    vectors.push_back(it->bits);
  }
  return aggregate_avg_score(std::span<const LabelVector>(vectors));
}

// --- report ---------------------------------------------------------------------

MetricsReport table2_report(std::vector<ReportRow> rows) {
  if (rows.size() < 2) throw PreconditionError("table2_report: need at least 2 rows");
  MetricsReport report;
  std::vector<double> f1, precision, recall, wer, k;
  for (const auto& r : rows) {
    f1.push_back(r.f1);
    precision.push_back(r.precision);
    recall.push_back(r.recall);
    wer.push_back(r.wer);
    k.push_back(static_cast<double>(r.feature_count));
  }
  report.mean = {mean(f1), mean(precision), mean(recall), mean(wer)};
  report.std = {sample_std(f1), sample_std(precision), sample_std(recall), sample_std(wer)};

  if (rows.size() >= 3) {
    try {
      report.simple = ols_simple(wer, f1);
    } catch (const PreconditionError&) {
    }
  }
  if (rows.size() >= 4) {
    std::vector<std::array<double, 2>> x;
    for (std::size_t i = 0; i < rows.size(); ++i) x.push_back({k[i], wer[i]});
    try {
      report.multiple = ols_multiple(x, f1);
    } catch (const PreconditionError&) {
    }
  }
  report.rows = std::move(rows);
  return report;
}

namespace {

json summary_to_json(const ColumnSummary& s) {
  return {{"f1", s.f1}, {"precision", s.precision}, {"recall", s.recall}, {"wer", s.wer}};
}

ColumnSummary summary_from_json(const json& j) {
  return {j.at("f1").get<double>(), j.at("precision").get<double>(), j.at("recall").get<double>(),
          j.at("wer").get<double>()};
}

json simple_to_json(const SimpleRegression& r) {
  return {{"slope", r.slope}, {"intercept", r.intercept}, {"r2", r.r2},
          {"t_stat", r.t_stat}, {"p_value", r.p_value},     {"n", r.n}};
}

SimpleRegression simple_from_json(const json& j) {
  SimpleRegression r;
  r.slope = j.at("slope").get<double>();
  r.intercept = j.at("intercept").get<double>();
  r.r2 = j.at("r2").get<double>();
  r.t_stat = j.at("t_stat").get<double>();
  r.p_value = j.at("p_value").get<double>();
  r.n = j.at("n").get<std::size_t>();
  return r;
}

json multiple_to_json(const MultipleRegression& r) {
  return {{"coefficients", r.coefficients},
          {"r2", r.r2},
          {"f_stat", r.f_stat},
          {"p_value", r.p_value},
          {"df", {r.df1, r.df2}},
          {"n", r.n}};
}

MultipleRegression multiple_from_json(const json& j) {
  MultipleRegression r;
  r.coefficients = j.at("coefficients").get<std::array<double, 3>>();
  r.r2 = j.at("r2").get<double>();
  r.f_stat = j.at("f_stat").get<double>();
  r.p_value = j.at("p_value").get<double>();
  r.df1 = j.at("df").at(0).get<double>();
  r.df2 = j.at("df").at(1).get<double>();
  r.n = j.at("n").get<std::size_t>();
  return r;
}

std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string general(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"model", r.model_id},
                    {"k", r.feature_count},
                    {"f1", r.f1},
                    {"precision", r.precision},
                    {"recall", r.recall},
                    {"wer", r.wer}});
  }
  json j;
  j["rows"] = std::move(rows);
  j["mean"] = summary_to_json(report.mean);
  j["std"] = summary_to_json(report.std);
  j["regression"] = {{"simple", report.simple ? simple_to_json(*report.simple) : json(nullptr)},
                     {"multiple", report.multiple ? multiple_to_json(*report.multiple) : json(nullptr)}};
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    MetricsReport report;
    for (const auto& r : j.at("rows")) {
      report.rows.push_back({r.at("model").get<std::string>(), r.at("k").get<std::size_t>(),
                             r.at("f1").get<double>(), r.at("precision").get<double>(),
                             r.at("recall").get<double>(), r.at("wer").get<double>()});
    }
    report.mean = summary_from_json(j.at("mean"));
    report.std = summary_from_json(j.at("std"));
    const auto& reg = j.at("regression");
    if (!reg.at("simple").is_null()) report.simple = simple_from_json(reg.at("simple"));
    if (!reg.at("multiple").is_null()) report.multiple = multiple_from_json(reg.at("multiple"));
    return report;
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("malformed metrics report: ") + e.what());
  }
}

std::string report_to_table(const MetricsReport& report) {
  std::size_t model_width = std::string_view("Std. Deviation").size();
  for (const auto& r : report.rows) model_width = std::max(model_width, r.model_id.size());
  auto line = [&](const std::string& model, const std::string& k, double f1, double p, double r,
                  double w) {
    return pad_right(model, model_width) + pad_left(k, 4) + pad_left(fixed1(f1), 8) +
           pad_left(fixed1(p), 11) + pad_left(fixed1(r), 8) + pad_left(fixed1(w), 8) + "\n";
  };
  std::string out = pad_right("Model", model_width) + pad_left("k", 4) + pad_left("F1", 8) +
                    pad_left("Precision", 11) + pad_left("Recall", 8) + pad_left("WER", 8) + "\n";
  for (const auto& r : report.rows) {
    out += line(r.model_id, std::to_string(r.feature_count), r.f1, r.precision, r.recall, r.wer);
  }
  out += line("Mean", "", report.mean.f1, report.mean.precision, report.mean.recall, report.mean.wer);
  out += line("Std. Deviation", "", report.std.f1, report.std.precision, report.std.recall,
              report.std.wer);
  if (report.simple) {
    const auto& s = *report.simple;
    out += "\nF1 ~ WER: slope " + general(s.slope) + ", intercept " + general(s.intercept) + ", t(" +
           std::to_string(s.n - 2) + ") = " + general(s.t_stat) + ", p = " + general(s.p_value) +
           ", r2 = " + general(s.r2) + "\n";
  }
  if (report.multiple) {
    const auto& m = *report.multiple;
    out += std::string(report.simple ? "" : "\n") + "F1 ~ k + WER: b = [" + general(m.coefficients[0]) +
           ", " + general(m.coefficients[1]) + ", " + general(m.coefficients[2]) + "], F(" +
           general(m.df1) + ", " + general(m.df2) + ") = " + general(m.f_stat) +
           ", p = " + general(m.p_value) + "\n";
  }
  return out;
}

void write_report(const std::filesystem::path& path, const MetricsReport& report) {
  write_text(path, report_to_json(report));
  write_text(path.string() + ".txt", report_to_table(report));
}

// --- pipelines ------------------------------------------------------------------

SectionHyperparameters hyperparameters_of(const BundleSet& bundles) {
  SectionHyperparameters out;
  for (const auto& [section, bundle] : bundles) {
    out.emplace(section, bundle->classifier().hyperparameters());
  }
  return out;
}

BundleSet train_bundles(std::span<const AnnotatedExample> train, const FeatureRegistry& registry,
                        const SectionHyperparameters& params, const std::string& created_at) {
  BundleSet bundles;
  for (const auto& section : sections_of(train)) {
    auto fs = registry.find(section);
    if (fs == registry.end()) {
      throw PreconditionError("no feature set for section '" + section + "'");
    }
    auto hp = params.find(section);
    if (hp == params.end()) {
      throw PreconditionError("no hyperparameters for section '" + section + "'");
    }
    const auto slice = select_section(train, section);
    bundles.emplace(section, std::make_shared<const ExpertBundle>(
                                 train_section(slice, fs->second, hp->second, created_at)));
  }
  return bundles;
}

std::vector<SectionEvaluation> evaluate_sections(std::span<const AnnotatedExample> test,
                                                 const BundleSet& bundles,
                                                 const EvaluationOptions& options) {
  std::vector<SectionEvaluation> out;
  for (const auto& section : sections_of(test)) {
    auto it = bundles.find(section);
    if (it == bundles.end()) throw PreconditionError("no bundle for section '" + section + "'");
    const ExpertBundle& bundle = *it->second;
    std::vector<LabelVector> predictions, truths;
    double wer_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (test[i].section_id != section) continue;
      std::string transcript = test[i].text;
      if (options.simulate_wer > 0.0) {
        transcript = corrupt(test[i].text, options.simulate_wer, derive_seed(options.noise_seed, i)).transcript;
        wer_sum += wer(test[i].text, transcript);
      }
      predictions.push_back(bundle.score(transcript).bits);
      truths.push_back(test[i].labels);
      ++n;
    }
    SectionEvaluation e;
    e.section_id = section;
    e.feature_count = bundle.k_labels();
    e.prf = micro_prf(std::span<const LabelVector>(predictions), std::span<const LabelVector>(truths));
    e.wer = wer_sum / static_cast<double>(n);
    out.push_back(std::move(e));
  }
  return out;
}

MetricsReport metrics_report(std::span<const SectionEvaluation> sections) {
  std::vector<ReportRow> rows;
  for (const auto& s : sections) {
    rows.push_back({s.section_id, s.feature_count, 100.0 * s.prf.f1, 100.0 * s.prf.precision,
                    100.0 * s.prf.recall, 100.0 * s.wer});
  }
  return table2_report(std::move(rows));
}

MetricsReport evaluate_corpus(std::span<const AnnotatedExample> corpus, const FeatureRegistry& registry,
                              const SectionHyperparameters& params, double test_fraction,
                              std::uint64_t seed, const EvaluationOptions& options) {
  const CorpusSplit split = split_corpus(corpus, test_fraction, seed);
  const BundleSet bundles = train_bundles(split.train, registry, params, "1970-01-01T00:00:00.000Z");
  const auto sections = evaluate_sections(split.test, bundles, options);
  return metrics_report(sections);
}

NoiseSweepReport noise_sweep(const CorpusSplit& split, const BundleSet& bundles,
                             const NoiseSweepOptions& options) {
  if (options.targets.empty()) throw PreconditionError("noise_sweep: no WER targets");
  if (options.seeds == 0) throw PreconditionError("noise_sweep: seeds must be >= 1");
  NoiseSweepReport report;
  std::vector<double> xs, ys;
  for (double target : options.targets) {
    NoiseTargetSummary summary;
    summary.target = target;
    for (std::size_t s = 0; s < options.seeds; ++s) {
      NoiseCell cell;
      cell.target = target;
      cell.seed_index = s;
      cell.sections = evaluate_sections(split.test, bundles, {target, derive_seed(options.base_seed, s)});
      double wer_weighted = 0.0, f1_sum = 0.0;
      std::size_t utterances = 0;
      for (const auto& sec : cell.sections) {
        const std::size_t n = sec.prf.counts.total() / std::max<std::size_t>(sec.feature_count, 1);
        wer_weighted += sec.wer * static_cast<double>(n);
        utterances += n;
        f1_sum += sec.prf.f1;
        xs.push_back(sec.wer);
        ys.push_back(sec.prf.f1);
      }
      cell.mean_wer = wer_weighted / static_cast<double>(utterances);
      cell.mean_f1 = f1_sum / static_cast<double>(cell.sections.size());
      summary.mean_wer += cell.mean_wer;
      summary.mean_f1 += cell.mean_f1;
      report.cells.push_back(std::move(cell));
    }
    summary.mean_wer /= static_cast<double>(options.seeds);
    summary.mean_f1 /= static_cast<double>(options.seeds);
    report.targets.push_back(summary);
  }
  try {
    report.regression = ols_simple(xs, ys);
  } catch (const PreconditionError&) {
  }
  return report;
}

std::string noise_report_to_json(const NoiseSweepReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    json sections = json::array();
    for (const auto& s : c.sections) {
      sections.push_back({{"section", s.section_id},
                          {"k", s.feature_count},
                          {"f1", s.prf.f1},
                          {"precision", s.prf.precision},
                          {"recall", s.prf.recall},
                          {"wer", s.wer}});
    }
    cells.push_back({{"target", c.target},
                     {"seed", c.seed_index},
                     {"mean_wer", c.mean_wer},
                     {"mean_f1", c.mean_f1},
                     {"sections", std::move(sections)}});
  }
  json targets = json::array();
  for (const auto& t : report.targets) {
    targets.push_back({{"target", t.target}, {"mean_wer", t.mean_wer}, {"mean_f1", t.mean_f1}});
  }
  json j;
  j["targets"] = std::move(targets);
  j["cells"] = std::move(cells);
  j["regression"] = report.regression ? simple_to_json(*report.regression) : json(nullptr);
  return j.dump(2) + "\n";
}

std::string noise_report_to_table(const NoiseSweepReport& report) {
  std::string out = pad_left("Target", 8) + pad_left("Seeds", 7) + pad_left("WER", 8) +
                    pad_left("F1", 8) + "\n";
  for (const auto& t : report.targets) {
    std::size_t seeds = 0;
    for (const auto& c : report.cells) seeds += c.target == t.target ? 1 : 0;
    out += pad_left(fixed1(100.0 * t.target), 8) + pad_left(std::to_string(seeds), 7) +
           pad_left(fixed1(100.0 * t.mean_wer), 8) + pad_left(fixed1(100.0 * t.mean_f1), 8) + "\n";
  }
  if (report.regression) {
    const auto& s = *report.regression;
    out += "\nsection F1 ~ WER: slope " + general(s.slope) + ", t(" + std::to_string(s.n - 2) +
           ") = " + general(s.t_stat) + ", p = " + general(s.p_value) + "\n";
  }
  return out;
}

void write_noise_report(const std::filesystem::path& path, const NoiseSweepReport& report) {
  write_text(path, noise_report_to_json(report));
  write_text(path.string() + ".txt", noise_report_to_table(report));
}

}  // namespace culsim
