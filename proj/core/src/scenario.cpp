#include "culsim/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "culsim/errors.hpp"

namespace culsim {

using nlohmann::json;

void FeatureSet::validate() const {
  if (features.empty()) throw ScenarioError("section '" + section_id + "' declares no features");
  std::set<std::string> codes;
  for (const auto& f : features) {
    if (f.code.empty()) throw ScenarioError("section '" + section_id + "' has a feature without a code");
    if (!codes.insert(f.code).second) {
      throw ScenarioError("section '" + section_id + "' repeats feature code '" + f.code + "'");
    }
    if (f.description.empty()) {
      throw ScenarioError("feature '" + f.code + "' of section '" + section_id + "' has no description");
    }
  }
}

std::string_view Node::kind_name() const noexcept {
  switch (body.index()) {
    case 0:
      return "avatar_line";
    case 1:
      return "guide_note";
    case 2:
      return "evaluation_point";
    case 3:
      return "player_turn";
    default:
      return "end";
  }
}

const Node& Scenario::node(std::string_view id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) throw ScenarioError("no node '" + std::string(id) + "'");
  return it->second;
}

bool Scenario::has_node(std::string_view id) const { return nodes_.find(id) != nodes_.end(); }

const Scene& Scenario::scene_of(std::string_view node_id) const {
  const auto it = scene_by_node_.find(node_id);
  if (it == scene_by_node_.end()) throw ScenarioError("no node '" + std::string(node_id) + "'");
  for (const auto& scene : scenes_) {
    if (scene.id == it->second) return scene;
  }
  throw ScenarioError("no scene '" + it->second + "'");
}

std::vector<const Node*> Scenario::path() const {
  std::vector<const Node*> out;
  const Node* at = &node(start_);
  for (;;) {
    out.push_back(at);
    if (at->next.empty()) break;
    at = &node(at->next);
  }
  return out;
}

std::vector<const EvaluationPoint*> Scenario::evaluation_points() const {
  std::vector<const EvaluationPoint*> out;
  for (const auto* n : path()) {
    if (const auto* ep = std::get_if<EvaluationPoint>(&n->body)) out.push_back(ep);
  }
  return out;
}

std::size_t Scenario::input_node_count() const {
  std::size_t count = 0;
  for (const auto* n : path()) count += n->awaits_player() ? 1 : 0;
  return count;
}

FeatureRegistry Scenario::feature_registry() const {
  FeatureRegistry registry;
  for (const auto* ep : evaluation_points()) registry.emplace(ep->section_id(), ep->feature_set);
  return registry;
}

namespace {

std::string required_string(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ScenarioError(where + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

NodeBody body_from_json(const json& j, const std::string& where) {
  const auto kind = required_string(j, "kind", where);
  if (kind == "avatar_line") {
    return AvatarLine{required_string(j, "speaker", where), required_string(j, "text", where)};
  }
  if (kind == "guide_note") return GuideNote{required_string(j, "text", where)};
  if (kind == "evaluation_point") {
    EvaluationPoint ep;
    ep.feature_set.section_id = required_string(j, "section", where);
    const auto features = j.find("features");
    if (features == j.end() || !features->is_array()) {
      throw ScenarioError(where + ": evaluation point needs a 'features' array");
    }
    for (const auto& fj : *features) {
      Feature f;
      f.code = required_string(fj, "code", where);
      f.description = required_string(fj, "description", where);
      f.success_phrase = fj.value("success_phrase", "");
      f.improvement_phrase = fj.value("improvement_phrase", "");
      ep.feature_set.features.push_back(std::move(f));
    }
    ep.repeat_prompt = required_string(j, "repeat_prompt", where);
    ep.repeat_speaker = j.value("repeat_speaker", "");
    ep.feature_set.validate();
    return ep;
  }
  if (kind == "player_turn") {
    return PlayerTurn{required_string(j, "repeat_prompt", where), j.value("repeat_speaker", "")};
  }
  if (kind == "end") return End{};
  throw ScenarioError(where + ": unknown node kind '" + kind + "'");
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ScenarioError("scenario document must be an object");

  Scenario s;
  s.id_ = required_string(root, "id", "scenario");
  s.title_ = root.value("title", "");
  const auto scenes = root.find("scenes");
  if (scenes == root.end() || !scenes->is_array() || scenes->empty()) {
    throw ScenarioError("scenario '" + s.id_ + "' has no scenes");
  }

  std::vector<std::string> order;
  std::map<std::string, bool> explicit_next;
  std::set<std::string> sections;
  std::size_t end_count = 0;
  for (const auto& sj : *scenes) {
    Scene scene;
    scene.id = required_string(sj, "id", "scene");
    scene.title = sj.value("title", "");
    const auto nodes = sj.find("nodes");
    if (nodes == sj.end() || !nodes->is_array() || nodes->empty()) {
      throw ScenarioError("scene '" + scene.id + "' has no nodes");
    }
    for (const auto& nj : *nodes) {
      Node node;
      node.id = required_string(nj, "id", "node in scene '" + scene.id + "'");
      const std::string where = "node '" + node.id + "'";
      node.body = body_from_json(nj, where);
      if (nj.contains("next")) {
        node.next = required_string(nj, "next", where);
        explicit_next[node.id] = true;
      }
      if (std::holds_alternative<End>(node.body)) {
        ++end_count;
        if (!node.next.empty()) throw ScenarioError(where + ": End node cannot have a successor");
      }
      if (const auto* ep = std::get_if<EvaluationPoint>(&node.body)) {
        if (!sections.insert(ep->section_id()).second) {
          throw ScenarioError("duplicate section id '" + ep->section_id() + "'");
        }
      }
      if (s.nodes_.count(node.id) != 0) throw ScenarioError("duplicate node id '" + node.id + "'");
      scene.node_ids.push_back(node.id);
      s.scene_by_node_.emplace(node.id, scene.id);
      order.push_back(node.id);
      s.nodes_.emplace(node.id, std::move(node));
    }
    s.scenes_.push_back(std::move(scene));
  }
  if (end_count == 0) throw ScenarioError("scenario '" + s.id_ + "' has no End node");
  if (end_count > 1) throw ScenarioError("scenario '" + s.id_ + "' has more than one End node");

  // Implicit successors follow document order.
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& node = s.nodes_.at(order[i]);
    if (std::holds_alternative<End>(node.body) || explicit_next.count(node.id) != 0) continue;
    if (i + 1 == order.size()) {
      throw ScenarioError("node '" + node.id + "' is last in the document but is not End");
    }
    node.next = order[i + 1];
  }
  for (const auto& [id, node] : s.nodes_) {
    if (!node.next.empty() && s.nodes_.count(node.next) == 0) {
      throw ScenarioError("node '" + id + "' points to missing node '" + node.next + "'");
    }
  }

  s.start_ = order.front();
  std::set<std::string> visited;
  const Node* at = &s.nodes_.at(s.start_);
  for (;;) {
    if (!visited.insert(at->id).second) {
      throw ScenarioError("cycle through node '" + at->id + "': the storyline never reaches End");
    }
    if (at->next.empty()) break;
    at = &s.nodes_.at(at->next);
  }
  for (const auto& id : order) {
    if (visited.count(id) == 0) throw ScenarioError("node '" + id + "' is unreachable from the start");
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string ModelMismatch::describe() const {
  if (kind == Kind::missing_model) return "section '" + section_id + "': no model bundle";
  return "section '" + section_id + "': bundle emits " + std::to_string(actual) +
         " labels, feature set has " + std::to_string(expected);
}

std::vector<ModelMismatch> validate_against_models(const Scenario& scenario, const BundleSet& bundles) {
  std::vector<ModelMismatch> out;
  for (const auto* ep : scenario.evaluation_points()) {
    const auto it = bundles.find(ep->section_id());
    if (it == bundles.end() || !it->second) {
      out.push_back({ModelMismatch::Kind::missing_model, ep->section_id(), ep->feature_set.size(), 0});
    } else if (it->second->k_labels() != ep->feature_set.size()) {
      out.push_back({ModelMismatch::Kind::arity_mismatch, ep->section_id(), ep->feature_set.size(),
                     it->second->k_labels()});
    }
  }
  return out;
}

}  // namespace culsim
