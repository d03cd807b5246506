#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "culsim/classifiers.hpp"
#include "culsim/feature_set.hpp"

namespace culsim {

enum class ExampleSource { authored, paraphrase_template, scripted_replay };

std::string_view to_string(ExampleSource source);
ExampleSource parse_example_source(std::string_view name);

/// One utterance with its feature labels for one section.
struct AnnotatedExample {
  std::string section_id;
  std::string text;
  LabelVector labels;
  ExampleSource source = ExampleSource::authored;
  std::vector<std::string> annotator_ids;

  friend bool operator==(const AnnotatedExample&, const AnnotatedExample&) = default;
};

/// Checks the example invariants against the registry. Throws CorpusError
/// (tagged with `line` when non-zero).
void validate_example(const AnnotatedExample& example, const FeatureRegistry& registry,
                      std::size_t line = 0);

// --- JSONL I/O ------------------------------------------------------------------

std::vector<AnnotatedExample> parse_corpus(std::string_view jsonl, const FeatureRegistry& registry);
std::vector<AnnotatedExample> load_corpus(const std::filesystem::path& path,
                                          const FeatureRegistry& registry);

std::string corpus_to_jsonl(std::span<const AnnotatedExample> examples);
void write_corpus(const std::filesystem::path& path, std::span<const AnnotatedExample> examples);

// --- splitting --------------------------------------------------------------------

struct CorpusSplit {
  std::vector<AnnotatedExample> train;
  std::vector<AnnotatedExample> test;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;
};

/// Stratified per section. Each section contributes round(fraction * n)
/// test examples, clamped to [1, n - 1]; both sides keep corpus order.
CorpusSplit split_corpus(std::span<const AnnotatedExample> examples, double test_fraction,
                         std::uint64_t seed);

/// Examples of one section, in corpus order.
std::vector<AnnotatedExample> select_section(std::span<const AnnotatedExample> examples,
                                             std::string_view section_id);

/// Section ids in order of first appearance.
std::vector<std::string> sections_of(std::span<const AnnotatedExample> examples);

/// Content hash of a corpus slice (section, text and labels of each example).
std::string corpus_digest(std::span<const AnnotatedExample> examples);

// --- synthesis ---------------------------------------------------------------------

/// A slot whose realization decides one feature's label.
struct FeatureSlot {
  std::size_t feature = 0;
  std::vector<std::string> on;
  std::vector<std::string> off;
};

/// Phrase pattern with `{name}` placeholders. Plain slots pick one
/// alternative; feature slots flip a fair coin for their feature and pick
/// from `on`/`off`. `labels` gives the bits not driven by a feature slot.
struct PhraseTemplate {
  std::string pattern;
  std::map<std::string, std::vector<std::string>> slots;
  std::map<std::string, FeatureSlot> feature_slots;
  LabelVector labels;
};

struct SectionTemplates {
  std::string section_id;
  std::vector<PhraseTemplate> templates;
  /// Always emitted verbatim (reference rows, transcript lines).
  std::vector<AnnotatedExample> seed_rows;
};

struct TemplateLibrary {
  std::vector<SectionTemplates> sections;
};

TemplateLibrary parse_template_library(std::string_view json);
TemplateLibrary load_template_library(const std::filesystem::path& path);

/// Fills `{slot}` placeholders and tidies whitespace/punctuation spacing;
/// capitalizes the first letter.
std::string render_pattern(std::string_view pattern,
                           const std::map<std::string, std::string>& choices);

/// Per section: the seed rows, then `count_per_section` distinct
/// realizations drawn from the section's templates. Deterministic in `seed`.
/// Throws CorpusError when a template's label arity mismatches its section.
std::vector<AnnotatedExample> synthesize_corpus(const TemplateLibrary& library,
                                                const FeatureRegistry& registry,
                                                std::size_t count_per_section, std::uint64_t seed);

}  // namespace culsim
