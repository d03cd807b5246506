#include "json_io.hpp"

#include "culsim/errors.hpp"

namespace culsim::detail {

using nlohmann::json;

json labels_to_json(const LabelVector& bits) {
  json out = json::array();
  for (auto b : bits) out.push_back(static_cast<int>(b));
  return out;
}

LabelVector labels_from_json(const json& j) {
  LabelVector bits;
  for (const auto& b : j) {
    const int v = b.get<int>();
    if (v != 0 && v != 1) throw PreconditionError("label bits must be 0 or 1");
    bits.push_back(static_cast<std::uint8_t>(v));
  }
  return bits;
}

json hyperparameters_to_json(const Hyperparameters& params) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KnnParams>) {
          return {{"kind", "knn"}, {"neighbors", p.neighbors}};
        } else if constexpr (std::is_same_v<T, RfParams>) {
          return {{"kind", "rf"},           {"trees", p.trees},
                  {"max_depth", p.max_depth}, {"seed", p.seed},
                  {"feature_subsample", p.feature_subsample}, {"bootstrap", p.bootstrap}};
        } else {
          return {{"kind", "mlp"},  {"hidden", p.hidden}, {"learning_rate", p.learning_rate},
                  {"epochs", p.epochs}, {"seed", p.seed},  {"zero_init", p.zero_init}};
        }
      },
      params);
}

Hyperparameters hyperparameters_from_json(const json& j) {
  const auto kind = parse_classifier_kind(j.at("kind").get<std::string>());
  switch (kind) {
    case ClassifierKind::knn:
      return KnnParams{j.at("neighbors").get<int>()};
    case ClassifierKind::random_forest: {
      RfParams p;
      p.trees = j.at("trees").get<int>();
      p.max_depth = j.at("max_depth").get<int>();
      p.seed = j.at("seed").get<std::uint64_t>();
      p.feature_subsample = j.value("feature_subsample", 0);
      p.bootstrap = j.value("bootstrap", true);
      return p;
    }
    case ClassifierKind::mlp: {
      MlpParams p;
      p.hidden = j.at("hidden").get<int>();
      p.learning_rate = j.at("learning_rate").get<double>();
      p.epochs = j.at("epochs").get<int>();
      p.seed = j.at("seed").get<std::uint64_t>();
      p.zero_init = j.value("zero_init", false);
      return p;
    }
  }
  throw PreconditionError("unknown classifier kind");
}

json vectorizer_to_json(const VectorizerModel& model) {
  json vocab = json::object();
  for (const auto& [token, index] : model.vocabulary()) vocab[token] = index;
  return {{"vocabulary", std::move(vocab)},
          {"idf", std::vector<double>(model.idf().begin(), model.idf().end())},
          {"documents", model.document_count()}};
}

VectorizerModel vectorizer_from_json(const json& j) {
  Vocabulary vocab;
  for (const auto& [token, index] : j.at("vocabulary").items()) {
    vocab.emplace(token, index.get<std::uint32_t>());
  }
  return VectorizerModel::from_parts(std::move(vocab), j.at("idf").get<std::vector<double>>(),
                                     j.at("documents").get<std::size_t>());
}

namespace {

json sparse_to_json(const SparseVector& v) {
  json entries = json::array();
  for (const auto& e : v.entries) entries.push_back(json::array({e.index, e.weight}));
  return entries;
}

SparseVector sparse_from_json(const json& j, std::size_t dimension) {
  SparseVector v;
  v.dimension = dimension;
  for (const auto& e : j) v.entries.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<double>()});
  return v;
}

json tree_to_json(const DecisionTree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(),
       right = json::array(), value = json::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(static_cast<int>(n.value));
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
          {"value", value}};
}

DecisionTree tree_from_json(const json& j) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<int>>();
  const auto n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n || n == 0) {
    throw PreconditionError("decision tree arrays are inconsistent");
  }
  DecisionTree tree;
  for (std::size_t i = 0; i < n; ++i) {
    DecisionTree::Node node{feature[i], threshold[i], left[i], right[i],
                            static_cast<std::uint8_t>(value[i] != 0)};
    if (node.feature >= 0) {
      const auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
      if (!in_range(node.left) || !in_range(node.right)) {
        throw PreconditionError("decision tree child index out of range");
      }
    }
    tree.nodes.push_back(node);
  }
  return tree;
}

}  // namespace

json classifier_to_json(const ClassifierModel& model) {
  json j;
  j["kind"] = std::string(to_string(model.kind()));
  j["k_labels"] = model.k_labels();
  j["hyperparameters"] = hyperparameters_to_json(model.hyperparameters());
  json params;
  if (const auto* s = model.knn()) {
    params["dimension"] = s->points.empty() ? 0 : s->points.front().dimension;
    params["points"] = json::array();
    for (const auto& p : s->points) params["points"].push_back(sparse_to_json(p));
    params["labels"] = json::array();
    for (const auto& l : s->labels) params["labels"].push_back(labels_to_json(l));
  } else if (const auto* s = model.forest()) {
    params["dimension"] = s->dimension;
    params["forests"] = json::array();
    for (const auto& forest : s->forests) {
      json trees = json::array();
      for (const auto& t : forest) trees.push_back(tree_to_json(t));
      params["forests"].push_back(std::move(trees));
    }
  } else if (const auto* s = model.mlp()) {
    params["inputs"] = s->inputs;
    params["hidden"] = s->hidden;
    params["outputs"] = s->outputs;
    params["w1"] = s->w1;
    params["b1"] = s->b1;
    params["w2"] = s->w2;
    params["b2"] = s->b2;
  }
  j["parameters"] = std::move(params);
  return j;
}

ClassifierModel classifier_from_json(const json& j) {
  const auto hp = hyperparameters_from_json(j.at("hyperparameters"));
  const auto& params = j.at("parameters");
  const auto k = j.at("k_labels").get<std::size_t>();
  switch (kind_of(hp)) {
    case ClassifierKind::knn: {
      KnnState s;
      s.neighbors = std::get<KnnParams>(hp).neighbors;
      const auto d = params.at("dimension").get<std::size_t>();
      for (const auto& p : params.at("points")) s.points.push_back(sparse_from_json(p, d));
      for (const auto& l : params.at("labels")) s.labels.push_back(labels_from_json(l));
      if (s.points.size() != s.labels.size()) throw PreconditionError("knn points/labels differ");
      for (const auto& l : s.labels) {
        if (l.size() != k) throw PreconditionError("knn label arity mismatch");
      }
      return ClassifierModel(std::move(s));
    }
    case ClassifierKind::random_forest: {
      ForestState s;
      s.params = std::get<RfParams>(hp);
      s.dimension = params.at("dimension").get<std::size_t>();
      for (const auto& forest : params.at("forests")) {
        std::vector<DecisionTree> trees;
        for (const auto& t : forest) trees.push_back(tree_from_json(t));
        s.forests.push_back(std::move(trees));
      }
      if (s.forests.size() != k) throw PreconditionError("forest count differs from k_labels");
      return ClassifierModel(std::move(s));
    }
    case ClassifierKind::mlp: {
      MlpState s;
      s.params = std::get<MlpParams>(hp);
      s.inputs = params.at("inputs").get<std::size_t>();
      s.hidden = params.at("hidden").get<std::size_t>();
      s.outputs = params.at("outputs").get<std::size_t>();
      s.w1 = params.at("w1").get<std::vector<double>>();
      s.b1 = params.at("b1").get<std::vector<double>>();
      s.w2 = params.at("w2").get<std::vector<double>>();
      s.b2 = params.at("b2").get<std::vector<double>>();
      if (s.w1.size() != s.hidden * s.inputs || s.b1.size() != s.hidden ||
          s.w2.size() != s.outputs * s.hidden || s.b2.size() != s.outputs || s.outputs != k) {
        throw PreconditionError("mlp weight shapes are inconsistent");
      }
      return ClassifierModel(std::move(s));
    }
  }
  throw PreconditionError("unknown classifier kind");
}

}  // namespace culsim::detail
