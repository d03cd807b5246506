#include "culsim/asr.hpp"

#include <algorithm>
#include <array>
#include <vector>

#include "culsim/errors.hpp"
#include "culsim/textrep.hpp"
#include "culsim/util.hpp"

namespace culsim {

std::string_view to_string(AsrChannel channel) {
  switch (channel) {
    case AsrChannel::passthrough:
      return "passthrough";
    case AsrChannel::simulated_noise:
      return "simulated_noise";
    case AsrChannel::external:
      return "external";
  }
  return "passthrough";
}

AsrChannel parse_asr_channel(std::string_view name) {
  if (name == "passthrough") return AsrChannel::passthrough;
  if (name == "simulated_noise") return AsrChannel::simulated_noise;
  if (name == "external") return AsrChannel::external;
  throw PreconditionError("unknown ASR channel '" + std::string(name) + "'");
}

AsrResult recognize_passthrough(std::string_view text) {
  return {std::string(text), 1.0, AsrChannel::passthrough};
}

namespace {

// Short function words and near-homophones of the scenario vocabulary,
// including name-like confusions.
constexpr std::array<std::string_view, 32> kPool = {
    "the",  "a",      "and",   "to",     "of",   "in",     "uh",     "um",
    "wong", "one",    "won",   "ones",   "cap",  "captain", "hey",   "hi",
    "sir",  "her",    "on",    "owner",  "brief", "bring", "meat",   "you",
    "your", "there",  "their", "here",   "here's", "well", "morning", "honored"};

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

// Character-level fallback when the pool word collides with the original.
std::string perturb(std::string word, Rng& rng) {
  if (word.empty()) return "x";
  const auto pos = static_cast<std::size_t>(rng.below(word.size()));
  const char c = static_cast<char>('a' + rng.below(26));
  word[pos] = (word[pos] == c) ? static_cast<char>('a' + (c - 'a' + 1) % 26) : c;
  return word;
}

}  // namespace

std::span<const std::string_view> confusion_pool() { return kPool; }

AsrResult corrupt(std::string_view text, double target_wer, std::uint64_t seed) {
  if (!(target_wer >= 0.0 && target_wer <= 0.9)) {
    throw PreconditionError("corrupt: target_wer must lie in [0, 0.9]");
  }
  const auto words = split_words(text);
  if (words.empty() || target_wer == 0.0) {
    return {std::string(text), 1.0, AsrChannel::simulated_noise};
  }

  Rng rng(seed);
  const double third = target_wer / 3.0;
  std::vector<std::string> out;
  std::size_t events = 0;
  for (const auto& word : words) {
    const double u = rng.uniform();
    if (u < third) {
      std::string replacement(kPool[static_cast<std::size_t>(rng.below(kPool.size()))]);
      if (tokenize(replacement) == tokenize(word)) replacement = perturb(replacement, rng);
      out.push_back(std::move(replacement));
      ++events;
    } else if (u < 2.0 * third) {
      ++events;
    } else if (u < target_wer) {
      out.push_back(word);
      out.emplace_back(kPool[static_cast<std::size_t>(rng.below(kPool.size()))]);
      ++events;
    } else {
      out.push_back(word);
    }
  }
  if (events == 0) return {std::string(text), 1.0, AsrChannel::simulated_noise};

  std::string transcript;
  for (const auto& w : out) {
    if (!transcript.empty()) transcript += ' ';
    transcript += w;
  }
  const double fraction = static_cast<double>(events) / static_cast<double>(words.size());
  return {std::move(transcript), std::clamp(1.0 - fraction, 0.0, 1.0), AsrChannel::simulated_noise};
}

std::size_t word_edit_distance(std::span<const std::string> reference,
                               std::span<const std::string> hypothesis) {
  std::vector<std::size_t> prev(hypothesis.size() + 1), cur(hypothesis.size() + 1);
  for (std::size_t j = 0; j <= hypothesis.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= reference.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hypothesis.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hypothesis.size()];
}

double wer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = tokenize(reference);
  if (ref.empty()) throw PreconditionError("wer: reference has no words");
  const auto hyp = tokenize(hypothesis);
  return static_cast<double>(word_edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

}  // namespace culsim
