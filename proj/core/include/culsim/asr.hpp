#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace culsim {

enum class AsrChannel { passthrough, simulated_noise, external };

std::string_view to_string(AsrChannel channel);
AsrChannel parse_asr_channel(std::string_view name);

/// Recognized text plus the recognizer's confidence in [0, 1].
struct AsrResult {
  std::string transcript;
  double confidence = 1.0;
  AsrChannel channel = AsrChannel::passthrough;

  friend bool operator==(const AsrResult&, const AsrResult&) = default;
};

/// Text-mode recognition: the transcript is the input, confidence 1.
AsrResult recognize_passthrough(std::string_view text);

/// Word-level noise. Each whitespace-separated word independently is
/// substituted, deleted, or followed by an inserted word, each with
/// probability target_wer / 3 (the three events are exclusive). Confidence
/// is 1 minus the realized fraction of corrupted words. Text without any
/// realized event comes back verbatim. Requires 0 <= target_wer <= 0.9.
AsrResult corrupt(std::string_view text, double target_wer, std::uint64_t seed);

/// Fixed pool used for substitutions and insertions.
std::span<const std::string_view> confusion_pool();

/// Unit-cost Levenshtein distance between token sequences.
std::size_t word_edit_distance(std::span<const std::string> reference,
                               std::span<const std::string> hypothesis);

/// Word error rate over tokenize()d text. Throws PreconditionError when the
/// reference has no tokens. May exceed 1 for long hypotheses.
double wer(std::string_view reference, std::string_view hypothesis);

/// Seam for a real recognizer (cloud API or similar). None ships.
class SpeechRecognizer {
 public:
  virtual ~SpeechRecognizer() = default;
  virtual AsrResult recognize(std::string_view utterance) = 0;
};

}  // namespace culsim
