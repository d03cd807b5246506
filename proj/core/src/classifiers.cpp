#include "culsim/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "culsim/errors.hpp"
#include "culsim/util.hpp"

namespace culsim {

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::knn:
      return "knn";
    case ClassifierKind::random_forest:
      return "rf";
    case ClassifierKind::mlp:
      return "mlp";
  }
  return "unknown";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  if (name == "knn") return ClassifierKind::knn;
  if (name == "rf" || name == "random_forest") return ClassifierKind::random_forest;
  if (name == "mlp") return ClassifierKind::mlp;
  throw PreconditionError("unknown classifier kind '" + std::string(name) + "'");
}

ClassifierKind kind_of(const Hyperparameters& params) {
  return std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KnnParams>) return ClassifierKind::knn;
        else if constexpr (std::is_same_v<T, RfParams>) return ClassifierKind::random_forest;
        else return ClassifierKind::mlp;
      },
      params);
}

Hyperparameters default_hyperparameters(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::knn:
      return KnnParams{};
    case ClassifierKind::random_forest:
      return RfParams{};
    case ClassifierKind::mlp:
      return MlpParams{};
  }
  return RfParams{};
}

namespace {

std::size_t check_training_set(std::span<const SparseVector> x, std::span<const LabelVector> y,
                               std::size_t min_size, const char* who) {
  if (x.size() != y.size()) {
    throw PreconditionError(std::string(who) + ": feature and label counts differ");
  }
  if (x.empty()) throw PreconditionError(std::string(who) + ": empty training set");
  if (x.size() < min_size) {
    throw PreconditionError(std::string(who) + ": need at least " + std::to_string(min_size) +
                            " training examples");
  }
  const std::size_t k = y.front().size();
  if (k == 0) throw PreconditionError(std::string(who) + ": label vectors must be non-empty");
  const std::size_t d = x.front().dimension;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i].size() != k) throw PreconditionError(std::string(who) + ": inconsistent label arity");
    for (auto bit : y[i]) {
      if (bit > 1) throw PreconditionError(std::string(who) + ": labels must be 0 or 1");
    }
    if (x[i].dimension != d) {
      throw PreconditionError(std::string(who) + ": inconsistent feature dimension");
    }
  }
  return k;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

// --- ClassifierModel -------------------------------------------------------

ClassifierModel::ClassifierModel(KnnState state)
    : state_(std::move(state)),
      k_labels_(std::get<KnnState>(state_).labels.empty()
                    ? 0
                    : std::get<KnnState>(state_).labels.front().size()) {}

ClassifierModel::ClassifierModel(ForestState state)
    : state_(std::move(state)), k_labels_(std::get<ForestState>(state_).forests.size()) {}

ClassifierModel::ClassifierModel(MlpState state)
    : state_(std::move(state)), k_labels_(std::get<MlpState>(state_).outputs) {}

ClassifierKind ClassifierModel::kind() const noexcept {
  switch (state_.index()) {
    case 0:
      return ClassifierKind::knn;
    case 1:
      return ClassifierKind::random_forest;
    default:
      return ClassifierKind::mlp;
  }
}

Hyperparameters ClassifierModel::hyperparameters() const {
  if (const auto* s = knn()) return KnnParams{s->neighbors};
  if (const auto* s = forest()) return s->params;
  return mlp()->params;
}

LabelVector ClassifierModel::predict(const SparseVector& x) const {
  if (const auto* s = knn()) return predict_knn(*s, x);
  if (const auto* s = forest()) return predict_rf(*s, x);
  return predict_mlp(*mlp(), x);
}

// --- KNN -------------------------------------------------------------------

ClassifierModel train_knn(std::span<const SparseVector> x, std::span<const LabelVector> y,
                          int neighbors) {
  if (neighbors < 1) throw PreconditionError("train_knn: neighbors must be >= 1");
  check_training_set(x, y, 1, "train_knn");
  if (static_cast<std::size_t>(neighbors) > x.size()) {
    throw PreconditionError("train_knn: neighbors (" + std::to_string(neighbors) +
                            ") exceeds training set size (" + std::to_string(x.size()) + ")");
  }
  KnnState state;
  state.neighbors = neighbors;
  state.points.assign(x.begin(), x.end());
  state.labels.assign(y.begin(), y.end());
  return ClassifierModel(std::move(state));
}

LabelVector predict_knn(const KnnState& state, const SparseVector& x) {
  const std::size_t k = state.labels.empty() ? 0 : state.labels.front().size();
  LabelVector bits(k, 0);
  if (x.is_zero() || state.points.empty()) return bits;

  std::vector<std::pair<double, std::size_t>> sims;
  sims.reserve(state.points.size());
  for (std::size_t i = 0; i < state.points.size(); ++i) sims.emplace_back(x.dot(state.points[i]), i);
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(state.neighbors), sims.size());
  std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(take), sims.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });

  double total = 0.0;
  std::vector<double> positive(k, 0.0);
  for (std::size_t n = 0; n < take; ++n) {
    const auto [sim, idx] = sims[n];
    total += sim;
    for (std::size_t j = 0; j < k; ++j) positive[j] += sim * state.labels[idx][j];
  }
  if (!(total > 0.0)) return bits;
  for (std::size_t j = 0; j < k; ++j) bits[j] = positive[j] >= 0.5 * total ? 1 : 0;
  return bits;
}

// --- random forest ------------------------------------------------------------

double gini(std::size_t positives, std::size_t total) noexcept {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(positives) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

std::uint8_t DecisionTree::predict(std::span<const double> dense) const {
  int at = 0;
  for (;;) {
    const Node& node = nodes[static_cast<std::size_t>(at)];
    if (node.feature < 0) return node.value;
    const auto f = static_cast<std::size_t>(node.feature);
    const double v = f < dense.size() ? dense[f] : 0.0;
    at = v <= node.threshold ? node.left : node.right;
  }
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

namespace {

class TreeGrower {
 public:
  TreeGrower(const std::vector<std::vector<double>>& rows, std::span<const std::uint8_t> target,
             std::size_t dimension, std::size_t candidates, int max_depth, Rng& rng)
      : rows_(rows),
        target_(target),
        dimension_(dimension),
        candidates_(candidates),
        max_depth_(max_depth),
        rng_(rng) {}

  DecisionTree grow(std::vector<std::size_t> sample) {
    DecisionTree tree;
    build(tree, std::move(sample), 0);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  int build(DecisionTree& tree, std::vector<std::size_t> sample, int depth) {
    const auto at = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    std::size_t positives = 0;
    for (auto i : sample) positives += target_[i];
    tree.nodes.back().value = 2 * positives >= sample.size() ? 1 : 0;
    if (positives == 0 || positives == sample.size() || depth >= max_depth_ || sample.size() < 2) {
      return at;
    }

    const Split split = best_split(sample);
    if (split.feature < 0) return at;

    std::vector<std::size_t> left, right;
    for (auto i : sample) {
      (rows_[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right)
          .push_back(i);
    }
    sample.clear();
    sample.shrink_to_fit();
    const int l = build(tree, std::move(left), depth + 1);
    const int r = build(tree, std::move(right), depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(at)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return at;
  }

  // Examines features in a seeded random order. Stops after `candidates_`
  // features once a valid partition exists; keeps going otherwise.
  Split best_split(const std::vector<std::size_t>& sample) {
    std::vector<std::size_t> order(dimension_);
    std::iota(order.begin(), order.end(), std::size_t{0});

    Split best;
    const double n = static_cast<double>(sample.size());
    std::size_t total_pos = 0;
    for (auto i : sample) total_pos += target_[i];

    std::vector<std::pair<double, std::uint8_t>> column(sample.size());
    for (std::size_t examined = 0; examined < dimension_; ++examined) {
      if (examined >= candidates_ && best.feature >= 0) break;
      const auto pick = examined + static_cast<std::size_t>(rng_.below(dimension_ - examined));
      std::swap(order[examined], order[pick]);
      const std::size_t f = order[examined];

      for (std::size_t s = 0; s < sample.size(); ++s) {
        column[s] = {rows_[sample[s]][f], target_[sample[s]]};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;

      std::size_t left_n = 0, left_pos = 0;
      for (std::size_t s = 0; s + 1 < column.size(); ++s) {
        ++left_n;
        left_pos += column[s].second;
        if (column[s].first == column[s + 1].first) continue;
        const std::size_t right_n = sample.size() - left_n;
        const std::size_t right_pos = total_pos - left_pos;
        const double impurity = (static_cast<double>(left_n) * gini(left_pos, left_n) +
                                 static_cast<double>(right_n) * gini(right_pos, right_n)) /
                                n;
        if (best.feature < 0 || impurity < best.impurity) {
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (column[s].first + column[s + 1].first);
          best.impurity = impurity;
        }
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& rows_;
  std::span<const std::uint8_t> target_;
  std::size_t dimension_;
  std::size_t candidates_;
  int max_depth_;
  Rng& rng_;
};

}  // namespace

ClassifierModel train_rf(std::span<const SparseVector> x, std::span<const LabelVector> y,
                         const RfParams& params) {
  if (params.trees < 1) throw PreconditionError("train_rf: trees must be >= 1");
  if (params.max_depth < 0) throw PreconditionError("train_rf: max_depth must be >= 0");
  const std::size_t k = check_training_set(x, y, 2, "train_rf");
  const std::size_t n = x.size();
  const std::size_t d = x.front().dimension;

  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (const auto& v : x) rows.push_back(v.to_dense());

  std::size_t candidates = params.feature_subsample > 0
                               ? static_cast<std::size_t>(params.feature_subsample)
                               : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  candidates = std::clamp<std::size_t>(candidates, 1, std::max<std::size_t>(d, 1));

  ForestState state;
  state.params = params;
  state.dimension = d;
  state.forests.resize(k);
  std::vector<std::uint8_t> target(n);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) target[i] = y[i][j];
    auto& forest = state.forests[j];
    forest.reserve(static_cast<std::size_t>(params.trees));
    for (int t = 0; t < params.trees; ++t) {
      Rng rng(derive_seed(params.seed, (static_cast<std::uint64_t>(j) << 32) |
                                           static_cast<std::uint64_t>(t)));
      std::vector<std::size_t> sample(n);
      if (params.bootstrap) {
        for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
        std::sort(sample.begin(), sample.end());
      } else {
        std::iota(sample.begin(), sample.end(), std::size_t{0});
      }
      TreeGrower grower(rows, target, d, candidates, params.max_depth, rng);
      forest.push_back(grower.grow(std::move(sample)));
    }
  }
  return ClassifierModel(std::move(state));
}

LabelVector predict_rf(const ForestState& state, const SparseVector& x) {
  std::vector<double> dense(state.dimension, 0.0);
  for (const auto& e : x.entries) {
    if (e.index < state.dimension) dense[e.index] = e.weight;
  }
  LabelVector bits(state.forests.size(), 0);
  for (std::size_t j = 0; j < state.forests.size(); ++j) {
    std::size_t ones = 0;
    for (const auto& tree : state.forests[j]) ones += tree.predict(dense);
    bits[j] = 2 * ones >= state.forests[j].size() ? 1 : 0;
  }
  return bits;
}

// --- MLP -------------------------------------------------------------------

MlpState init_mlp(std::size_t inputs, std::size_t outputs, const MlpParams& params) {
  if (params.hidden < 1) throw PreconditionError("train_mlp: hidden must be >= 1");
  MlpState s;
  s.params = params;
  s.inputs = inputs;
  s.hidden = static_cast<std::size_t>(params.hidden);
  s.outputs = outputs;
  s.w1.assign(s.hidden * inputs, 0.0);
  s.b1.assign(s.hidden, 0.0);
  s.w2.assign(outputs * s.hidden, 0.0);
  s.b2.assign(outputs, 0.0);
  if (!params.zero_init) {
    Rng rng(params.seed);
    const double scale1 = inputs > 0 ? 1.0 / std::sqrt(static_cast<double>(inputs)) : 0.0;
    const double scale2 = 1.0 / std::sqrt(static_cast<double>(s.hidden));
    for (auto& w : s.w1) w = rng.uniform(-0.5, 0.5) * scale1;
    for (auto& w : s.w2) w = rng.uniform(-0.5, 0.5) * scale2;
  }
  return s;
}

namespace {

struct Activations {
  std::vector<double> pre_hidden;
  std::vector<double> hidden;
  std::vector<double> logits;
};

Activations forward(const MlpState& s, const SparseVector& x) {
  Activations a;
  a.pre_hidden = s.b1;
  for (std::size_t h = 0; h < s.hidden; ++h) {
    const double* row = s.w1.data() + h * s.inputs;
    double acc = 0.0;
    for (const auto& e : x.entries) {
      if (e.index < s.inputs) acc += row[e.index] * e.weight;
    }
    a.pre_hidden[h] += acc;
  }
  a.hidden.resize(s.hidden);
  for (std::size_t h = 0; h < s.hidden; ++h) a.hidden[h] = std::max(0.0, a.pre_hidden[h]);
  a.logits = s.b2;
  for (std::size_t o = 0; o < s.outputs; ++o) {
    const double* row = s.w2.data() + o * s.hidden;
    for (std::size_t h = 0; h < s.hidden; ++h) a.logits[o] += row[h] * a.hidden[h];
  }
  return a;
}

}  // namespace

std::vector<double> mlp_forward(const MlpState& state, const SparseVector& x) {
  auto a = forward(state, x);
  for (auto& z : a.logits) z = sigmoid(z);
  return a.logits;
}

LabelVector predict_mlp(const MlpState& state, const SparseVector& x) {
  const auto probs = mlp_forward(state, x);
  LabelVector bits(probs.size(), 0);
  for (std::size_t j = 0; j < probs.size(); ++j) bits[j] = probs[j] >= 0.5 ? 1 : 0;
  return bits;
}

double mlp_loss(const MlpState& state, std::span<const SparseVector> x,
                std::span<const LabelVector> y) {
  if (x.empty() || state.outputs == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto a = forward(state, x[i]);
    for (std::size_t o = 0; o < state.outputs; ++o) {
      total += softplus(a.logits[o]) - static_cast<double>(y[i][o]) * a.logits[o];
    }
  }
  return total / static_cast<double>(x.size() * state.outputs);
}

std::vector<double> mlp_gradient(const MlpState& s, std::span<const SparseVector> x,
                                 std::span<const LabelVector> y) {
  std::vector<double> grad(s.parameter_count(), 0.0);
  if (x.empty() || s.outputs == 0) return grad;
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + s.w1.size();
  double* g_w2 = g_b1 + s.b1.size();
  double* g_b2 = g_w2 + s.w2.size();
  const double scale = 1.0 / static_cast<double>(x.size() * s.outputs);

  std::vector<double> d_logit(s.outputs), d_hidden(s.hidden);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto a = forward(s, x[i]);
    for (std::size_t o = 0; o < s.outputs; ++o) {
      d_logit[o] = (sigmoid(a.logits[o]) - static_cast<double>(y[i][o])) * scale;
      g_b2[o] += d_logit[o];
      double* row = g_w2 + o * s.hidden;
      for (std::size_t h = 0; h < s.hidden; ++h) row[h] += d_logit[o] * a.hidden[h];
    }
    for (std::size_t h = 0; h < s.hidden; ++h) {
      double acc = 0.0;
      if (a.pre_hidden[h] > 0.0) {
        for (std::size_t o = 0; o < s.outputs; ++o) acc += s.w2[o * s.hidden + h] * d_logit[o];
      }
      d_hidden[h] = acc;
      g_b1[h] += acc;
      if (acc != 0.0) {
        double* row = g_w1 + h * s.inputs;
        for (const auto& e : x[i].entries) {
          if (e.index < s.inputs) row[e.index] += acc * e.weight;
        }
      }
    }
  }
  return grad;
}

namespace {

std::vector<double> flatten(const MlpState& s) {
  std::vector<double> flat;
  flat.reserve(s.parameter_count());
  for (const auto* part : {&s.w1, &s.b1, &s.w2, &s.b2}) flat.insert(flat.end(), part->begin(), part->end());
  return flat;
}

void unflatten(std::span<const double> flat, MlpState& s) {
  auto it = flat.begin();
  for (auto* part : {&s.w1, &s.b1, &s.w2, &s.b2}) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(part->size()), part->begin());
    it += static_cast<std::ptrdiff_t>(part->size());
  }
}

}  // namespace

ClassifierModel train_mlp(std::span<const SparseVector> x, std::span<const LabelVector> y,
                          const MlpParams& params) {
  if (!(params.learning_rate > 0.0)) throw PreconditionError("train_mlp: learning rate must be > 0");
  if (params.epochs < 0) throw PreconditionError("train_mlp: epochs must be >= 0");
  const std::size_t k = check_training_set(x, y, 1, "train_mlp");
  MlpState s = init_mlp(x.front().dimension, k, params);

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const auto grad = mlp_gradient(s, x, y);
    auto g = grad.begin();
    for (auto* part : {&s.w1, &s.b1, &s.w2, &s.b2}) {
      for (auto& w : *part) w -= params.learning_rate * *g++;
    }
  }
  return ClassifierModel(std::move(s));
}

double relative_gradient_discrepancy(std::span<double> params,
                                     const std::function<double()>& loss,
                                     std::span<const double> analytic, double epsilon) {
  if (params.size() != analytic.size()) {
    throw PreconditionError("gradient check: parameter and gradient sizes differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double original = params[i];
    params[i] = original + epsilon;
    const double plus = loss();
    params[i] = original - epsilon;
    const double minus = loss();
    params[i] = original;
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-8);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

double gradient_check(const ClassifierModel& model, std::span<const SparseVector> x,
                      std::span<const LabelVector> y, double epsilon,
                      double analytic_perturbation) {
  const auto* state = model.mlp();
  if (state == nullptr) throw PreconditionError("gradient_check: model is not an MLP");
  if (epsilon < 1e-7 || epsilon > 1e-3) {
    throw PreconditionError("gradient_check: epsilon must lie in [1e-7, 1e-3]");
  }
  check_training_set(x, y, 1, "gradient_check");

  MlpState work = *state;
  auto analytic = mlp_gradient(work, x, y);
  for (auto& g : analytic) g += analytic_perturbation;
  auto flat = flatten(work);
  const auto loss = [&] {
    unflatten(flat, work);
    return mlp_loss(work, x, y);
  };
  return relative_gradient_discrepancy(flat, loss, analytic, epsilon);
}

ClassifierModel train_classifier(std::span<const SparseVector> x, std::span<const LabelVector> y,
                                 const Hyperparameters& params) {
  return std::visit(
      [&](const auto& p) -> ClassifierModel {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KnnParams>) return train_knn(x, y, p.neighbors);
        else if constexpr (std::is_same_v<T, RfParams>) return train_rf(x, y, p);
        else return train_mlp(x, y, p);
      },
      params);
}

}  // namespace culsim
