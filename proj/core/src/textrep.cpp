#include "culsim/textrep.hpp"

#include <cmath>
#include <set>

#include "culsim/errors.hpp"

namespace culsim {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         c == '\'' || c >= 0x80;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                             : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double SparseVector::norm() const noexcept {
  double sum = 0.0;
  for (const auto& e : entries) sum += e.weight * e.weight;
  return std::sqrt(sum);
}

double SparseVector::dot(const SparseVector& other) const noexcept {
  double sum = 0.0;
  auto a = entries.begin();
  auto b = other.entries.begin();
  while (a != entries.end() && b != other.entries.end()) {
    if (a->index < b->index) {
      ++a;
    } else if (b->index < a->index) {
      ++b;
    } else {
      sum += a->weight * b->weight;
      ++a;
      ++b;
    }
  }
  return sum;
}

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> dense(dimension, 0.0);
  for (const auto& e : entries) dense[e.index] = e.weight;
  return dense;
}

VectorizerModel fit_vectorizer(std::span<const Tokens> documents) {
  std::map<std::string, std::size_t> document_frequency;
  bool any_tokens = false;
  for (const auto& doc : documents) {
    std::set<std::string_view> seen(doc.begin(), doc.end());
    for (auto token : seen) ++document_frequency[std::string(token)];
    any_tokens = any_tokens || !doc.empty();
  }
  if (!any_tokens) throw PreconditionError("fit_vectorizer: every document is empty");

  VectorizerModel model;
  model.document_count_ = documents.size();
  const double n = static_cast<double>(documents.size());
  std::uint32_t index = 0;
  model.idf_.reserve(document_frequency.size());
  for (const auto& [token, df] : document_frequency) {
    model.vocabulary_.emplace(token, index++);
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(df))) + 1.0);
  }
  return model;
}

VectorizerModel VectorizerModel::from_parts(Vocabulary vocabulary, std::vector<double> idf,
                                            std::size_t document_count) {
  if (vocabulary.size() != idf.size()) {
    throw PreconditionError("vectorizer: vocabulary and idf sizes differ");
  }
  if (document_count == 0) throw PreconditionError("vectorizer: document count must be positive");
  std::vector<bool> used(idf.size(), false);
  for (const auto& [token, index] : vocabulary) {
    if (index >= idf.size() || used[index]) {
      throw PreconditionError("vectorizer: vocabulary indices are not a contiguous range");
    }
    used[index] = true;
  }
  for (double w : idf) {
    if (!(w >= 1.0) || !std::isfinite(w)) throw PreconditionError("vectorizer: idf weight below 1");
  }
  VectorizerModel model;
  model.vocabulary_ = std::move(vocabulary);
  model.idf_ = std::move(idf);
  model.document_count_ = document_count;
  return model;
}

double VectorizerModel::idf_of(std::string_view token) const {
  const auto it = vocabulary_.find(token);
  return it == vocabulary_.end() ? 0.0 : idf_[it->second];
}

SparseVector VectorizerModel::transform(std::string_view text) const {
  const Tokens tokens = tokenize(text);
  return transform_tokens(tokens);
}

SparseVector VectorizerModel::transform_tokens(std::span<const std::string> tokens) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& token : tokens) {
    const auto it = vocabulary_.find(token);
    if (it != vocabulary_.end()) counts[it->second] += 1.0;
  }
  SparseVector out;
  out.dimension = dimension();
  out.entries.reserve(counts.size());
  for (const auto& [index, count] : counts) out.entries.push_back({index, count * idf_[index]});
  const double norm = out.norm();
  if (norm > 0.0) {
    for (auto& e : out.entries) e.weight /= norm;
  }
  return out;
}

}  // namespace culsim
