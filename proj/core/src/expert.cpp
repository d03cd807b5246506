#include "culsim/expert.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "culsim/errors.hpp"
#include "culsim/util.hpp"
#include "json_io.hpp"

namespace culsim {

using nlohmann::json;

ExpertBundle::ExpertBundle(std::string section_id, VectorizerModel vectorizer,
                           ClassifierModel classifier, std::vector<std::string> feature_codes,
                           std::string training_digest, std::string created_at)
    : section_id_(std::move(section_id)),
      vectorizer_(std::move(vectorizer)),
      classifier_(std::move(classifier)),
      feature_codes_(std::move(feature_codes)),
      training_digest_(std::move(training_digest)),
      created_at_(std::move(created_at)) {
  if (classifier_.k_labels() != feature_codes_.size()) {
    throw PreconditionError("bundle '" + section_id_ + "': classifier emits " +
                            std::to_string(classifier_.k_labels()) + " labels but the feature set has " +
                            std::to_string(feature_codes_.size()));
  }
}

ScoreVector ExpertBundle::score(std::string_view text) const {
  return {section_id_, classifier_.predict(vectorizer_.transform(text))};
}

ExpertBundle train_section(std::span<const AnnotatedExample> examples, const FeatureSet& feature_set,
                           const Hyperparameters& params, std::string created_at) {
  const auto& section = feature_set.section_id;
  if (examples.empty()) throw PreconditionError("train_section: no examples for '" + section + "'");
  std::vector<Tokens> docs;
  std::vector<LabelVector> labels;
  docs.reserve(examples.size());
  for (const auto& ex : examples) {
    if (ex.section_id != section) {
      throw PreconditionError("train_section: example from section '" + ex.section_id +
                              "' in the slice for '" + section + "'");
    }
    if (ex.labels.size() != feature_set.size()) {
      throw PreconditionError("train_section: label arity mismatch in section '" + section + "'");
    }
    docs.push_back(tokenize(ex.text));
    labels.push_back(ex.labels);
  }

  auto vectorizer = fit_vectorizer(docs);
  std::vector<SparseVector> vectors;
  vectors.reserve(docs.size());
  for (const auto& doc : docs) vectors.push_back(vectorizer.transform_tokens(doc));
  auto classifier = train_classifier(vectors, labels, params);

  std::vector<std::string> codes;
  for (const auto& f : feature_set.features) codes.push_back(f.code);
  if (created_at.empty()) created_at = utc_timestamp();
  return ExpertBundle(section, std::move(vectorizer), std::move(classifier), std::move(codes),
                      corpus_digest(examples), std::move(created_at));
}

namespace {

json payload_of(const ExpertBundle& b) {
  json j;
  j["section"] = b.section_id();
  j["feature_set"] = {{"section", b.section_id()}, {"codes", b.feature_codes()}};
  j["vectorizer"] = detail::vectorizer_to_json(b.vectorizer());
  j["classifier"] = detail::classifier_to_json(b.classifier());
  j["training_digest"] = b.training_digest();
  return j;
}

std::string checksum(const json& payload) { return to_hex(fnv1a64(payload.dump())); }

}  // namespace

std::string bundle_to_json(const ExpertBundle& bundle) {
  json j = payload_of(bundle);
  j["digest"] = checksum(j);
  j["format_version"] = kBundleFormatVersion;
  j["created_at"] = bundle.created_at();
  return j.dump(1);
}

ExpertBundle bundle_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw BundleError(BundleError::Kind::corruption, std::string("bundle is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format_version")) {
    throw BundleError(BundleError::Kind::corruption, "bundle lacks format_version");
  }
  const auto& version = j.at("format_version");
  if (!version.is_number_integer() || version.get<long long>() != kBundleFormatVersion) {
    throw BundleError(BundleError::Kind::version,
                      "unsupported bundle format_version " + version.dump() + " (expected " +
                          std::to_string(kBundleFormatVersion) + ")");
  }
  try {
    json payload;
    for (const char* key : {"section", "feature_set", "vectorizer", "classifier", "training_digest"}) {
      payload[key] = j.at(key);
    }
    if (checksum(payload) != j.at("digest").get<std::string>()) {
      throw BundleError(BundleError::Kind::corruption, "bundle digest does not match its content");
    }
    auto section = j.at("section").get<std::string>();
    if (j.at("feature_set").at("section").get<std::string>() != section) {
      throw BundleError(BundleError::Kind::corruption, "bundle feature_set names another section");
    }
    return ExpertBundle(std::move(section), detail::vectorizer_from_json(j.at("vectorizer")),
                        detail::classifier_from_json(j.at("classifier")),
                        j.at("feature_set").at("codes").get<std::vector<std::string>>(),
                        j.at("training_digest").get<std::string>(), j.value("created_at", ""));
  } catch (const json::exception& e) {
    throw BundleError(BundleError::Kind::corruption, std::string("malformed bundle: ") + e.what());
  } catch (const PreconditionError& e) {
    throw BundleError(BundleError::Kind::corruption, std::string("inconsistent bundle: ") + e.what());
  }
}

void save_bundle(const ExpertBundle& bundle, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw BundleError(BundleError::Kind::io, "cannot write '" + path.string() + "'");
  out << bundle_to_json(bundle) << '\n';
  if (!out) throw BundleError(BundleError::Kind::io, "write failed for '" + path.string() + "'");
}

ExpertBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BundleError(BundleError::Kind::io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return bundle_from_json(buf.str());
}

std::filesystem::path bundle_path(const std::filesystem::path& dir, std::string_view section_id) {
  return dir / (std::string(section_id) + ".bundle.json");
}

BundleSet load_bundle_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw BundleError(BundleError::Kind::io, "model directory '" + dir.string() + "' does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 12 &&
        name.compare(name.size() - 12, 12, ".bundle.json") == 0) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  BundleSet bundles;
  for (const auto& file : files) {
    auto bundle = std::make_shared<const ExpertBundle>(load_bundle(file));
    const auto id = bundle->section_id();
    if (!bundles.emplace(id, std::move(bundle)).second) {
      throw BundleError(BundleError::Kind::corruption, "two bundles for section '" + id + "'");
    }
  }
  return bundles;
}

}  // namespace culsim
