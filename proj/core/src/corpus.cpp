#include "culsim/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "culsim/errors.hpp"
#include "culsim/util.hpp"

namespace culsim {

using nlohmann::json;

std::string_view to_string(ExampleSource source) {
  switch (source) {
    case ExampleSource::authored:
      return "authored";
    case ExampleSource::paraphrase_template:
      return "paraphrase-template";
    case ExampleSource::scripted_replay:
      return "scripted-replay";
  }
  return "authored";
}

ExampleSource parse_example_source(std::string_view name) {
  if (name == "authored") return ExampleSource::authored;
  if (name == "paraphrase-template") return ExampleSource::paraphrase_template;
  if (name == "scripted-replay") return ExampleSource::scripted_replay;
  throw CorpusError("unknown example source '" + std::string(name) + "'");
}

void validate_example(const AnnotatedExample& example, const FeatureRegistry& registry,
                      std::size_t line) {
  const auto it = registry.find(example.section_id);
  if (it == registry.end()) {
    throw CorpusError("unknown section '" + example.section_id + "'", line);
  }
  if (example.labels.size() != it->second.size()) {
    throw CorpusError("label arity " + std::to_string(example.labels.size()) + " does not match " +
                          std::to_string(it->second.size()) + " features of section '" +
                          example.section_id + "'",
                      line);
  }
  for (auto bit : example.labels) {
    if (bit > 1) throw CorpusError("labels must be 0 or 1", line);
  }
  if (trim(example.text).empty()) throw CorpusError("empty utterance text", line);
}

namespace {

AnnotatedExample example_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw CorpusError("record is not a JSON object", line);
  AnnotatedExample ex;
  try {
    ex.section_id = j.at("section").get<std::string>();
    ex.text = j.at("text").get<std::string>();
    for (const auto& bit : j.at("labels")) {
      if (!bit.is_number_integer()) throw CorpusError("labels must be integers 0 or 1", line);
      const auto v = bit.get<long long>();
      if (v != 0 && v != 1) throw CorpusError("labels must be 0 or 1", line);
      ex.labels.push_back(static_cast<std::uint8_t>(v));
    }
    if (const auto src = j.find("source"); src != j.end()) {
      ex.source = parse_example_source(src->get<std::string>());
    }
    if (const auto ann = j.find("annotators"); ann != j.end()) {
      ex.annotator_ids = ann->get<std::vector<std::string>>();
    }
  } catch (const CorpusError& e) {
    if (e.line() != 0) throw;
    throw CorpusError(e.what(), line);
  } catch (const json::exception& e) {
    throw CorpusError(std::string("malformed record: ") + e.what(), line);
  }
  return ex;
}

json example_to_json(const AnnotatedExample& ex) {
  json j;
  j["section"] = ex.section_id;
  j["text"] = ex.text;
  j["labels"] = json::array();
  for (auto bit : ex.labels) j["labels"].push_back(static_cast<int>(bit));
  j["source"] = std::string(to_string(ex.source));
  if (!ex.annotator_ids.empty()) j["annotators"] = ex.annotator_ids;
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<AnnotatedExample> parse_corpus(std::string_view jsonl, const FeatureRegistry& registry) {
  std::vector<AnnotatedExample> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    auto ex = example_from_json(j, line_no);
    validate_example(ex, registry, line_no);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<AnnotatedExample> load_corpus(const std::filesystem::path& path,
                                          const FeatureRegistry& registry) {
  return parse_corpus(read_file(path), registry);
}

std::string corpus_to_jsonl(std::span<const AnnotatedExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += example_to_json(ex).dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, std::span<const AnnotatedExample> examples) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write '" + path.string() + "'");
  out << corpus_to_jsonl(examples);
  if (!out) throw CorpusError("write failed for '" + path.string() + "'");
}

std::vector<std::string> sections_of(std::span<const AnnotatedExample> examples) {
  std::vector<std::string> ids;
  std::set<std::string_view> seen;
  for (const auto& ex : examples) {
    if (seen.insert(ex.section_id).second) ids.push_back(ex.section_id);
  }
  return ids;
}

std::vector<AnnotatedExample> select_section(std::span<const AnnotatedExample> examples,
                                             std::string_view section_id) {
  std::vector<AnnotatedExample> out;
  for (const auto& ex : examples) {
    if (ex.section_id == section_id) out.push_back(ex);
  }
  return out;
}

std::string corpus_digest(std::span<const AnnotatedExample> examples) {
  std::uint64_t h = fnv1a64("");
  for (const auto& ex : examples) {
    std::string line = ex.section_id + '\t' + ex.text + '\t';
    for (auto bit : ex.labels) line += static_cast<char>('0' + bit);
    line += '\n';
    h = fnv1a64(line, h);
  }
  return to_hex(h);
}

CorpusSplit split_corpus(std::span<const AnnotatedExample> examples, double test_fraction,
                         std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw PreconditionError("split_corpus: test fraction must lie strictly between 0 and 1");
  }
  std::map<std::string, std::vector<std::size_t>> by_section;
  for (std::size_t i = 0; i < examples.size(); ++i) by_section[examples[i].section_id].push_back(i);

  std::vector<bool> is_test(examples.size(), false);
  for (auto& [section, indices] : by_section) {
    if (indices.size() < 2) {
      throw PreconditionError("split_corpus: section '" + section +
                              "' has fewer than 2 examples");
    }
    Rng rng(derive_seed(seed, section));
    rng.shuffle(std::span(indices));
    const auto n = static_cast<double>(indices.size());
    const auto wanted = static_cast<long long>(std::llround(test_fraction * n));
    const auto n_test = static_cast<std::size_t>(
        std::clamp<long long>(wanted, 1, static_cast<long long>(indices.size()) - 1));
    for (std::size_t t = 0; t < n_test; ++t) is_test[indices[t]] = true;
  }

  CorpusSplit split;
  split.seed = seed;
  split.test_fraction = test_fraction;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (is_test[i] ? split.test : split.train).push_back(examples[i]);
  }
  return split;
}

// --- synthesis ---------------------------------------------------------------------

namespace {

bool is_closing_punct(char c) { return c == ',' || c == '.' || c == '?' || c == '!' || c == ';' || c == ':'; }

}  // namespace

std::string render_pattern(std::string_view pattern,
                           const std::map<std::string, std::string>& choices) {
  std::string filled;
  for (std::size_t i = 0; i < pattern.size();) {
    if (pattern[i] == '{') {
      const auto close = pattern.find('}', i);
      if (close == std::string_view::npos) throw CorpusError("unterminated slot in template");
      const std::string name(pattern.substr(i + 1, close - i - 1));
      const auto it = choices.find(name);
      if (it == choices.end()) throw CorpusError("template slot '" + name + "' has no alternatives");
      filled += it->second;
      i = close + 1;
    } else {
      filled += pattern[i++];
    }
  }

  // Collapse whitespace, drop spaces before punctuation and commas that run
  // into other punctuation (left behind by empty alternatives).
  std::string out;
  for (char c : filled) {
    const bool space = c == ' ' || c == '\t' || c == '\n';
    if (space) {
      if (!out.empty() && out.back() != ' ') out += ' ';
      continue;
    }
    if (is_closing_punct(c)) {
      while (!out.empty() && out.back() == ' ') out.pop_back();
      if (out.empty()) continue;
      if (out.back() == ',' ) out.pop_back();
      if (c == ',' && !out.empty() && is_closing_punct(out.back())) continue;
    }
    out += c;
  }
  out = trim(out);
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') {
      c = static_cast<char>(c - 'a' + 'A');
      break;
    }
    if (c >= 'A' && c <= 'Z') break;
  }
  return out;
}

namespace {

PhraseTemplate template_from_json(const json& j) {
  PhraseTemplate t;
  t.pattern = j.at("pattern").get<std::string>();
  if (const auto s = j.find("slots"); s != j.end()) {
    for (const auto& [name, alts] : s->items()) t.slots[name] = alts.get<std::vector<std::string>>();
  }
  if (const auto f = j.find("features"); f != j.end()) {
    for (const auto& [name, spec] : f->items()) {
      FeatureSlot slot;
      slot.feature = spec.at("feature").get<std::size_t>();
      slot.on = spec.at("on").get<std::vector<std::string>>();
      slot.off = spec.at("off").get<std::vector<std::string>>();
      t.feature_slots[name] = std::move(slot);
    }
  }
  for (const auto& bit : j.at("labels")) t.labels.push_back(static_cast<std::uint8_t>(bit.get<int>()));
  return t;
}

}  // namespace

TemplateLibrary parse_template_library(std::string_view text) {
  TemplateLibrary lib;
  try {
    const json root = json::parse(text);
    for (const auto& sj : root.at("sections")) {
      SectionTemplates sec;
      sec.section_id = sj.at("section").get<std::string>();
      if (const auto ts = sj.find("templates"); ts != sj.end()) {
        for (const auto& tj : *ts) sec.templates.push_back(template_from_json(tj));
      }
      if (const auto rows = sj.find("seed_rows"); rows != sj.end()) {
        for (const auto& rj : *rows) {
          json row = rj;
          row["section"] = sec.section_id;
          sec.seed_rows.push_back(example_from_json(row, 0));
        }
      }
      lib.sections.push_back(std::move(sec));
    }
  } catch (const json::exception& e) {
    throw CorpusError(std::string("malformed template library: ") + e.what());
  }
  return lib;
}

TemplateLibrary load_template_library(const std::filesystem::path& path) {
  return parse_template_library(read_file(path));
}

namespace {

void validate_template(const PhraseTemplate& t, const FeatureSet& fs) {
  const std::string where = "template '" + t.pattern + "' of section '" + fs.section_id + "'";
  if (t.labels.size() != fs.size()) {
    throw CorpusError(where + ": label arity " + std::to_string(t.labels.size()) +
                      " does not match " + std::to_string(fs.size()) + " features");
  }
  std::set<std::size_t> driven;
  for (const auto& [name, slot] : t.feature_slots) {
    if (slot.feature >= fs.size()) throw CorpusError(where + ": slot '" + name + "' names a missing feature");
    if (!driven.insert(slot.feature).second) {
      throw CorpusError(where + ": feature driven by more than one slot");
    }
    if (t.slots.count(name) != 0) throw CorpusError(where + ": slot '" + name + "' declared twice");
  }
  for (const auto& [name, alts] : t.slots) {
    if (alts.empty()) throw CorpusError(where + ": slot '" + name + "' has no alternatives");
  }
}

std::string pick(Rng& rng, const std::vector<std::string>& alts) {
  if (alts.empty()) return {};
  return alts[static_cast<std::size_t>(rng.below(alts.size()))];
}

}  // namespace

std::vector<AnnotatedExample> synthesize_corpus(const TemplateLibrary& library,
                                                const FeatureRegistry& registry,
                                                std::size_t count_per_section, std::uint64_t seed) {
  std::vector<AnnotatedExample> out;
  for (const auto& section : library.sections) {
    const auto fs = registry.find(section.section_id);
    if (fs == registry.end()) throw CorpusError("templates for unknown section '" + section.section_id + "'");
    for (const auto& t : section.templates) validate_template(t, fs->second);

    std::set<std::string> seen;
    for (const auto& row : section.seed_rows) {
      validate_example(row, registry);
      seen.insert(row.text);
      out.push_back(row);
    }
    if (count_per_section == 0) continue;
    if (section.templates.empty()) {
      throw CorpusError("section '" + section.section_id + "' has no templates to synthesize from");
    }

    Rng rng(derive_seed(seed, section.section_id));
    std::size_t produced = 0;
    const std::size_t max_attempts = 200 * count_per_section + 100;
    for (std::size_t attempt = 0; produced < count_per_section; ++attempt) {
      const auto& t = section.templates[static_cast<std::size_t>(rng.below(section.templates.size()))];
      AnnotatedExample ex;
      ex.section_id = section.section_id;
      ex.source = ExampleSource::paraphrase_template;
      ex.labels = t.labels;
      std::map<std::string, std::string> choices;
      for (const auto& [name, alts] : t.slots) choices[name] = pick(rng, alts);
      for (const auto& [name, slot] : t.feature_slots) {
        const bool on = rng.below(2) == 1;
        ex.labels[slot.feature] = on ? 1 : 0;
        choices[name] = pick(rng, on ? slot.on : slot.off);
      }
      ex.text = render_pattern(t.pattern, choices);
      if (ex.text.empty()) {
        if (attempt >= max_attempts) {
          throw CorpusError("templates of section '" + section.section_id + "' render empty text");
        }
        continue;
      }
      // Past the attempt budget the template space is exhausted; accept repeats.
      if (!seen.insert(ex.text).second && attempt < max_attempts) continue;
      out.push_back(std::move(ex));
      ++produced;
    }
  }
  return out;
}

}  // namespace culsim
