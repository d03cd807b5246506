#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "culsim/textrep.hpp"

namespace culsim {

/// One bit per cultural feature, each 0 or 1.
using LabelVector = std::vector<std::uint8_t>;

/// Per-utterance feature hits for one section.
struct ScoreVector {
  std::string section_id;
  LabelVector bits;

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;
};

enum class ClassifierKind { knn, random_forest, mlp };

std::string_view to_string(ClassifierKind kind);
/// Accepts "knn", "rf"/"random_forest", "mlp". Throws PreconditionError.
ClassifierKind parse_classifier_kind(std::string_view name);

struct KnnParams {
  int neighbors = 5;
};

struct RfParams {
  int trees = 60;
  int max_depth = 16;
  std::uint64_t seed = 42;
  /// Candidate features per node; 0 selects ceil(sqrt(d)).
  int feature_subsample = 0;
  bool bootstrap = true;
};

struct MlpParams {
  int hidden = 32;
  double learning_rate = 1.0;
  int epochs = 600;
  std::uint64_t seed = 42;
  /// Test hook: start from all-zero weights instead of the seeded init.
  bool zero_init = false;
};

using Hyperparameters = std::variant<KnnParams, RfParams, MlpParams>;

ClassifierKind kind_of(const Hyperparameters& params);
Hyperparameters default_hyperparameters(ClassifierKind kind);

// --- learned state -------------------------------------------------------

struct KnnState {
  int neighbors = 1;
  std::vector<SparseVector> points;
  std::vector<LabelVector> labels;
};

/// Binary decision tree. Node 0 is the root; a node with feature < 0 is a leaf.
/// Samples with x[feature] <= threshold go left.
struct DecisionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::uint8_t value = 0;

    friend bool operator==(const Node&, const Node&) = default;
  };
  std::vector<Node> nodes;

  std::uint8_t predict(std::span<const double> dense) const;
  int depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestState {
  RfParams params;
  std::size_t dimension = 0;
  /// forests[j] holds the trees voting on label j.
  std::vector<std::vector<DecisionTree>> forests;
};

/// Dense d -> hidden (ReLU) -> k (sigmoid). Matrices are row-major:
/// w1 is hidden x d, w2 is k x hidden.
struct MlpState {
  MlpParams params;
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t outputs = 0;
  std::vector<double> w1, b1, w2, b2;

  std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

/// A trained multi-label classifier. Frozen after training.
class ClassifierModel {
 public:
  explicit ClassifierModel(KnnState state);
  explicit ClassifierModel(ForestState state);
  explicit ClassifierModel(MlpState state);

  ClassifierKind kind() const noexcept;
  std::size_t k_labels() const noexcept { return k_labels_; }
  Hyperparameters hyperparameters() const;

  /// Always returns exactly k_labels() bits.
  LabelVector predict(const SparseVector& x) const;

  const KnnState* knn() const noexcept { return std::get_if<KnnState>(&state_); }
  const ForestState* forest() const noexcept { return std::get_if<ForestState>(&state_); }
  const MlpState* mlp() const noexcept { return std::get_if<MlpState>(&state_); }

 private:
  std::variant<KnnState, ForestState, MlpState> state_;
  std::size_t k_labels_ = 0;
};

// --- KNN -------------------------------------------------------------------

/// Stores the training data verbatim.
ClassifierModel train_knn(std::span<const SparseVector> x, std::span<const LabelVector> y,
                          int neighbors);

/// Cosine-weighted vote over the `neighbors` most similar training points
/// (ties broken by lower training index); bit j is 1 iff the weighted share
/// of positives is >= 0.5. Zero input or zero total similarity gives all zeros.
LabelVector predict_knn(const KnnState& state, const SparseVector& x);

// --- random forest ------------------------------------------------------------

/// Binary relevance: one forest per label, Gini splits, seeded bootstrap.
ClassifierModel train_rf(std::span<const SparseVector> x, std::span<const LabelVector> y,
                         const RfParams& params);

/// Majority vote per label; an exact tie votes 1.
LabelVector predict_rf(const ForestState& state, const SparseVector& x);

/// Gini impurity of a binary node holding `positives` of `total`.
double gini(std::size_t positives, std::size_t total) noexcept;

// --- MLP -------------------------------------------------------------------

/// Full-batch gradient descent on mean binary cross-entropy.
ClassifierModel train_mlp(std::span<const SparseVector> x, std::span<const LabelVector> y,
                          const MlpParams& params);

/// Randomly initialized (or zero-initialized) network before any training.
MlpState init_mlp(std::size_t inputs, std::size_t outputs, const MlpParams& params);

/// Sigmoid outputs of the forward pass.
std::vector<double> mlp_forward(const MlpState& state, const SparseVector& x);

LabelVector predict_mlp(const MlpState& state, const SparseVector& x);

/// Mean binary cross-entropy over every (example, label) slot.
double mlp_loss(const MlpState& state, std::span<const SparseVector> x,
                std::span<const LabelVector> y);

/// Analytic gradient of mlp_loss, flattened in the order w1, b1, w2, b2.
std::vector<double> mlp_gradient(const MlpState& state, std::span<const SparseVector> x,
                                 std::span<const LabelVector> y);

/// Max over parameters of |analytic - numeric| / max(|analytic| + |numeric|, 1e-8)
/// where numeric is a central difference with step `epsilon`. `params` is
/// perturbed in place and restored before returning.
double relative_gradient_discrepancy(std::span<double> params,
                                     const std::function<double()>& loss,
                                     std::span<const double> analytic, double epsilon);

/// Checks the backpropagation of an MLP model against finite differences.
/// `analytic_perturbation` is a test hook added to every analytic component.
double gradient_check(const ClassifierModel& model, std::span<const SparseVector> x,
                      std::span<const LabelVector> y, double epsilon,
                      double analytic_perturbation = 0.0);

// --- dispatch ------------------------------------------------------------------

ClassifierModel train_classifier(std::span<const SparseVector> x, std::span<const LabelVector> y,
                                 const Hyperparameters& params);

}  // namespace culsim
