#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace culsim {

using Tokens = std::vector<std::string>;
using Vocabulary = std::map<std::string, std::uint32_t, std::less<>>;

/// Lowercases ASCII letters and splits on maximal runs of characters that are
/// neither alphanumeric nor an apostrophe. Bytes >= 0x80 (UTF-8 sequences)
/// count as word characters so non-ASCII words survive intact.
Tokens tokenize(std::string_view text);

struct SparseEntry {
  std::uint32_t index = 0;
  double weight = 0.0;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Sparse row vector with strictly increasing indices.
struct SparseVector {
  std::size_t dimension = 0;
  std::vector<SparseEntry> entries;

  bool is_zero() const noexcept { return entries.empty(); }
  double norm() const noexcept;
  double dot(const SparseVector& other) const noexcept;
  /// Dense copy of length `dimension`.
  std::vector<double> to_dense() const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

/// Fitted TF-IDF vocabulary. Immutable once built.
class VectorizerModel {
 public:
  VectorizerModel() = default;

  /// Rebuilds a model from serialized parts, validating the invariants
  /// (contiguous indices, idf >= 1, positive document count).
  static VectorizerModel from_parts(Vocabulary vocabulary,
                                    std::vector<double> idf, std::size_t document_count);

  const Vocabulary& vocabulary() const noexcept { return vocabulary_; }
  std::span<const double> idf() const noexcept { return idf_; }
  std::size_t document_count() const noexcept { return document_count_; }
  std::size_t dimension() const noexcept { return idf_.size(); }

  /// idf weight for `token`, or 0 when the token is out of vocabulary.
  double idf_of(std::string_view token) const;

  SparseVector transform(std::string_view text) const;
  SparseVector transform_tokens(std::span<const std::string> tokens) const;

 private:
  friend VectorizerModel fit_vectorizer(std::span<const Tokens> documents);

  Vocabulary vocabulary_;
  std::vector<double> idf_;
  std::size_t document_count_ = 0;
};

/// Smoothed idf: ln((1 + N) / (1 + df)) + 1. Vocabulary indices follow the
/// lexicographic order of the tokens. Throws PreconditionError when every
/// document is empty.
VectorizerModel fit_vectorizer(std::span<const Tokens> documents);

/// Raw term count times idf, then L2-normalized. Out-of-vocabulary tokens are
/// dropped; an all-OOV text gives the zero vector.
inline SparseVector transform(const VectorizerModel& model, std::string_view text) {
  return model.transform(text);
}

}  // namespace culsim
