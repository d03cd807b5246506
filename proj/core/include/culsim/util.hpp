#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace culsim {

/// Seeded generator used everywhere randomness is needed.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The mappings to integers and reals are implemented here rather
/// than through <random> distributions, whose algorithms are unspecified, so
/// a given seed yields the same draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child seed from a parent seed and a stream discriminator.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept;

/// 64-bit FNV-1a. Integrity checksum only, not a cryptographic hash.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::string to_hex(std::uint64_t value);

/// Current UTC time as ISO-8601 with millisecond resolution.
std::string utc_timestamp();

/// ISO-8601 UTC rendering of a unix epoch second count.
std::string utc_timestamp_from_epoch(std::int64_t epoch_seconds);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

std::string trim(std::string_view text);

}  // namespace culsim
