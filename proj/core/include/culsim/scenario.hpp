#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "culsim/expert.hpp"
#include "culsim/feature_set.hpp"

namespace culsim {

struct AvatarLine {
  std::string speaker;
  std::string text;
};

/// Simulation-guide narration shown to the trainee.
struct GuideNote {
  std::string text;
};

/// Scored free-form player turn.
struct EvaluationPoint {
  FeatureSet feature_set;
  std::string repeat_prompt;
  /// Avatar asking for the repeat; empty means the last avatar who spoke.
  std::string repeat_speaker;

  const std::string& section_id() const noexcept { return feature_set.section_id; }
};

/// Unscored free-form player turn (acknowledgements, small talk).
struct PlayerTurn {
  std::string repeat_prompt;
  std::string repeat_speaker;
};

struct End {};

using NodeBody = std::variant<AvatarLine, GuideNote, EvaluationPoint, PlayerTurn, End>;

struct Node {
  std::string id;
  /// Resolved successor id; empty only for the End node.
  std::string next;
  NodeBody body;

  bool awaits_player() const noexcept {
    return std::holds_alternative<EvaluationPoint>(body) || std::holds_alternative<PlayerTurn>(body);
  }
  std::string_view kind_name() const noexcept;
};

struct Scene {
  std::string id;
  std::string title;
  std::vector<std::string> node_ids;
};

/// Validated, immutable dialogue graph.
class Scenario {
 public:
  const std::string& id() const noexcept { return id_; }
  const std::string& title() const noexcept { return title_; }
  const std::vector<Scene>& scenes() const noexcept { return scenes_; }
  const std::string& start() const noexcept { return start_; }

  const Node& node(std::string_view id) const;
  bool has_node(std::string_view id) const;
  /// Scene owning a node.
  const Scene& scene_of(std::string_view node_id) const;

  /// Nodes along the (single) storyline from start to End.
  std::vector<const Node*> path() const;
  /// Evaluation points in storyline order.
  std::vector<const EvaluationPoint*> evaluation_points() const;
  std::size_t input_node_count() const;
  FeatureRegistry feature_registry() const;

 private:
  friend Scenario parse_scenario(std::string_view json);

  std::string id_;
  std::string title_;
  std::vector<Scene> scenes_;
  std::map<std::string, Node, std::less<>> nodes_;
  std::map<std::string, std::string, std::less<>> scene_by_node_;
  std::string start_;
};

/// Parses and fully validates a scenario document. Throws ScenarioError on a
/// dangling or missing reference, duplicate node or section id, missing or
/// repeated End, a cycle, or a node unreachable from the first node.
Scenario parse_scenario(std::string_view json);
Scenario load_scenario(const std::filesystem::path& path);

struct ModelMismatch {
  enum class Kind { missing_model, arity_mismatch };
  Kind kind;
  std::string section_id;
  std::size_t expected = 0;
  std::size_t actual = 0;

  std::string describe() const;
};

/// Lists evaluation points with no bundle and bundles whose label count
/// differs from the feature set.
std::vector<ModelMismatch> validate_against_models(const Scenario& scenario, const BundleSet& bundles);

}  // namespace culsim
