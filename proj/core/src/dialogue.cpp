#include "culsim/dialogue.hpp"

#include <fstream>
#include <sstream>

#include "culsim/errors.hpp"
#include "culsim/feedback.hpp"
#include "culsim/util.hpp"
#include "json_io.hpp"

namespace culsim {

using nlohmann::json;

void SessionConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("alpha must lie in [0, 1]");
  if (max_repeats < 1) throw PreconditionError("max_repeats must be >= 1");
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::awaiting_player:
      return "awaiting_player";
    case Phase::emitting:
      return "emitting";
    case Phase::ended:
      return "ended";
  }
  return "ended";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::avatar_lines:
      return "avatar_lines";
    case EventKind::guide_note:
      return "guide_note";
    case EventKind::repeat_request:
      return "repeat_request";
    case EventKind::feedback:
      return "feedback";
    case EventKind::session_ended:
      return "session_ended";
  }
  return "session_ended";
}

EventKind parse_event_kind(std::string_view name) {
  for (auto kind : {EventKind::avatar_lines, EventKind::guide_note, EventKind::repeat_request,
                    EventKind::feedback, EventKind::session_ended}) {
    if (to_string(kind) == name) return kind;
  }
  throw PreconditionError("unknown event kind '" + std::string(name) + "'");
}

bool TurnOutcome::repeat_requested() const {
  for (const auto& e : events) {
    if (e.kind == EventKind::repeat_request) return true;
  }
  return false;
}

bool TurnOutcome::session_ended() const {
  return !events.empty() && events.back().kind == EventKind::session_ended;
}

DialogueSession::DialogueSession(std::shared_ptr<const Scenario> scenario,
                                 std::shared_ptr<const BundleSet> bundles, SessionConfig config,
                                 std::string session_id)
    : scenario_(std::move(scenario)), bundles_(std::move(bundles)), config_(config) {
  state_.session_id = std::move(session_id);
  state_.scenario_id = scenario_->id();
  state_.cursor = scenario_->start();
  state_.phase = Phase::emitting;
}

void DialogueSession::emit_until_input(std::vector<Event>& events) {
  state_.phase = Phase::emitting;
  for (;;) {
    const Node& node = scenario_->node(state_.cursor);
    if (const auto* line = std::get_if<AvatarLine>(&node.body)) {
      events.push_back({EventKind::avatar_lines, node.id, line->speaker, line->text, std::nullopt});
    } else if (const auto* note = std::get_if<GuideNote>(&node.body)) {
      events.push_back({EventKind::guide_note, node.id, {}, note->text, std::nullopt});
    } else if (node.awaits_player()) {
      state_.phase = Phase::awaiting_player;
      return;
    } else {
      events.push_back({EventKind::session_ended, node.id, {}, "The session has ended.", std::nullopt});
      state_.phase = Phase::ended;
      return;
    }
    state_.cursor = node.next;
  }
}

void DialogueSession::advance(std::vector<Event>& events) {
  state_.pending_repeats = 0;
  state_.cursor = scenario_->node(state_.cursor).next;
  emit_until_input(events);
}

TurnOutcome DialogueSession::submit_input(const AsrResult& recognized,
                                          std::optional<std::string> raw_input) {
  if (state_.phase != Phase::awaiting_player) {
    throw TurnGateError("session '" + state_.session_id + "' is not awaiting input (phase " +
                        std::string(to_string(state_.phase)) + ")");
  }
  if (!(recognized.confidence >= 0.0 && recognized.confidence <= 1.0)) {
    throw PreconditionError("recognition confidence must lie in [0, 1]");
  }
  const Node& node = scenario_->node(state_.cursor);
  TurnOutcome outcome;
  const bool confident = recognized.confidence >= config_.alpha;

  if (!confident && state_.pending_repeats < config_.max_repeats) {
    ++state_.pending_repeats;
    const auto* ep = std::get_if<EvaluationPoint>(&node.body);
    const auto* turn = std::get_if<PlayerTurn>(&node.body);
    const std::string& prompt = ep != nullptr ? ep->repeat_prompt : turn->repeat_prompt;
    std::string speaker = ep != nullptr ? ep->repeat_speaker : turn->repeat_speaker;
    if (speaker.empty()) {
      for (const auto* n : scenario_->path()) {
        if (n->id == node.id) break;
        if (const auto* line = std::get_if<AvatarLine>(&n->body)) speaker = line->speaker;
      }
    }
    outcome.events.push_back({EventKind::repeat_request, node.id, speaker, prompt, std::nullopt});
    return outcome;
  }

  state_.phase = Phase::emitting;
  TurnRecord record;
  record.node_id = node.id;
  record.raw_input = raw_input.value_or(recognized.transcript);
  record.recognized = recognized;
  record.timestamp = utc_timestamp();

  if (const auto* ep = std::get_if<EvaluationPoint>(&node.body)) {
    record.section_id = ep->section_id();
    // Exhausted repeats let low-confidence input through unscored.
    if (confident) {
      const auto& bundle = bundles_->at(ep->section_id());
      ScoreVector score = bundle->score(recognized.transcript);
      std::string text = generate_feedback(ep->feature_set, score.bits);
      Event feedback{EventKind::feedback, node.id, {}, text, std::nullopt};
      if (config_.debug_scores) feedback.score = score;
      outcome.events.push_back(std::move(feedback));
      record.score = std::move(score);
      record.feedback = std::move(text);
    }
  }

  state_.log.push_back(record);
  if (sink_) sink_(record);
  outcome.record = std::move(record);
  advance(outcome.events);
  return outcome;
}

StartedSession start_session(std::shared_ptr<const Scenario> scenario,
                             std::shared_ptr<const BundleSet> bundles, SessionConfig config,
                             std::string session_id) {
  if (!scenario) throw PreconditionError("start_session: no scenario");
  if (!bundles) bundles = std::make_shared<const BundleSet>();
  config.validate();
  const auto mismatches = validate_against_models(*scenario, *bundles);
  if (!mismatches.empty()) {
    std::string what = "start_session: models do not match scenario '" + scenario->id() + "':";
    for (const auto& m : mismatches) what += "\n  " + m.describe();
    throw PreconditionError(what);
  }
  StartedSession started{DialogueSession(std::move(scenario), std::move(bundles), config,
                                         std::move(session_id)),
                         {}};
  started.session.emit_until_input(started.events);
  return started;
}

SessionState replay_script(std::shared_ptr<const Scenario> scenario,
                           std::shared_ptr<const BundleSet> bundles, SessionConfig config,
                           std::span<const std::string> lines, std::string session_id) {
  auto started = start_session(std::move(scenario), std::move(bundles), config, std::move(session_id));
  auto& session = started.session;
  std::size_t next_line = 0;
  while (session.state().phase == Phase::awaiting_player) {
    if (next_line >= lines.size()) {
      throw PreconditionError("replay_script: script has " + std::to_string(lines.size()) +
                              " lines but the session still awaits input at node '" +
                              session.state().cursor + "'");
    }
    const auto& line = lines[next_line++];
    session.submit_input(recognize_passthrough(line), line);
  }
  return session.state();
}

std::vector<std::string> load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open script '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    lines.push_back(t);
  }
  return lines;
}

// --- JSON ---------------------------------------------------------------------------

namespace detail {

json event_to_json(const Event& e) {
  json j{{"kind", std::string(to_string(e.kind))}, {"node", e.node_id}, {"text", e.text}};
  if (!e.speaker.empty()) j["speaker"] = e.speaker;
  if (e.score) j["score"] = labels_to_json(e.score->bits);
  return j;
}

json turn_record_to_json(const TurnRecord& r) {
  json j;
  j["node"] = r.node_id;
  j["section"] = r.section_id.empty() ? json(nullptr) : json(r.section_id);
  j["raw_input"] = r.raw_input;
  j["recognized"] = {{"transcript", r.recognized.transcript},
                     {"confidence", r.recognized.confidence},
                     {"channel", std::string(to_string(r.recognized.channel))}};
  j["score"] = r.score ? labels_to_json(r.score->bits) : json(nullptr);
  j["feedback"] = r.feedback ? json(*r.feedback) : json(nullptr);
  j["timestamp"] = r.timestamp;
  return j;
}

TurnRecord turn_record_from_json(const json& j) {
  TurnRecord r;
  r.node_id = j.at("node").get<std::string>();
  if (!j.at("section").is_null()) r.section_id = j.at("section").get<std::string>();
  r.raw_input = j.at("raw_input").get<std::string>();
  const auto& rec = j.at("recognized");
  r.recognized.transcript = rec.at("transcript").get<std::string>();
  r.recognized.confidence = rec.at("confidence").get<double>();
  r.recognized.channel = parse_asr_channel(rec.at("channel").get<std::string>());
  if (!j.at("score").is_null()) r.score = ScoreVector{r.section_id, labels_from_json(j.at("score"))};
  if (!j.at("feedback").is_null()) r.feedback = j.at("feedback").get<std::string>();
  r.timestamp = j.at("timestamp").get<std::string>();
  return r;
}

}  // namespace detail

std::string turn_record_to_json(const TurnRecord& record) {
  return detail::turn_record_to_json(record).dump();
}

TurnRecord turn_record_from_json(std::string_view line) {
  try {
    return detail::turn_record_from_json(json::parse(line));
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("malformed turn record: ") + e.what());
  }
}

std::string event_to_json(const Event& event) { return detail::event_to_json(event).dump(); }

void append_turn_record(const std::filesystem::path& path, const TurnRecord& record) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to session log '" + path.string() + "'");
  out << turn_record_to_json(record) << '\n';
  out.flush();
  if (!out) throw Error("write failed for session log '" + path.string() + "'");
}

std::vector<TurnRecord> read_session_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open session log '" + path.string() + "'");
  std::vector<TurnRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    records.push_back(turn_record_from_json(line));
  }
  return records;
}

}  // namespace culsim
