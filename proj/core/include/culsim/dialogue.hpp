#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "culsim/asr.hpp"
#include "culsim/classifiers.hpp"
#include "culsim/expert.hpp"
#include "culsim/scenario.hpp"

namespace culsim {

struct SessionConfig {
  /// Recognitions with confidence below alpha are sent back for a repeat.
  double alpha = 0.5;
  /// Repeat requests allowed per input node before the turn is let through.
  int max_repeats = 2;
  AsrChannel asr_mode = AsrChannel::passthrough;
  /// Attach score vectors to feedback events.
  bool debug_scores = false;

  void validate() const;
};

enum class Phase { awaiting_player, emitting, ended };
std::string_view to_string(Phase phase);

enum class EventKind { avatar_lines, guide_note, repeat_request, feedback, session_ended };
std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view name);

/// One item of engine output, delivered to the client in order.
struct Event {
  EventKind kind = EventKind::avatar_lines;
  std::string node_id;
  std::string speaker;  // avatar_lines and repeat_request only
  std::string text;
  std::optional<ScoreVector> score;  // feedback events in debug mode

  friend bool operator==(const Event&, const Event&) = default;
};

/// Log entry for one accepted player input.
struct TurnRecord {
  std::string node_id;
  std::string section_id;  // empty for unscored player turns
  std::string raw_input;
  AsrResult recognized;
  std::optional<ScoreVector> score;
  std::optional<std::string> feedback;
  std::string timestamp;

  friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

struct SessionState {
  std::string session_id;
  std::string scenario_id;
  std::string cursor;
  int pending_repeats = 0;
  std::vector<TurnRecord> log;
  Phase phase = Phase::emitting;
};

struct TurnOutcome {
  std::vector<Event> events;
  /// Set when the input was accepted (logged), empty on a repeat request.
  std::optional<TurnRecord> record;

  bool repeat_requested() const;
  bool session_ended() const;
};

/// Callback invoked with each TurnRecord before submit_input returns.
using RecordSink = std::function<void(const TurnRecord&)>;

/// Gated turn-taking over a validated scenario. Not thread-safe; callers
/// serialize access to one session.
class DialogueSession {
 public:
  const SessionState& state() const noexcept { return state_; }
  const SessionConfig& config() const noexcept { return config_; }
  const Scenario& scenario() const noexcept { return *scenario_; }

  /// Routes one recognition result through the gate. Throws TurnGateError
  /// unless the session is awaiting the player. `raw_input` defaults to the
  /// transcript.
  TurnOutcome submit_input(const AsrResult& recognized, std::optional<std::string> raw_input = {});

  void set_record_sink(RecordSink sink) { sink_ = std::move(sink); }

 private:
  friend struct StartedSession start_session(std::shared_ptr<const Scenario>,
                                             std::shared_ptr<const BundleSet>, SessionConfig,
                                             std::string);

  DialogueSession(std::shared_ptr<const Scenario> scenario, std::shared_ptr<const BundleSet> bundles,
                  SessionConfig config, std::string session_id);

  void emit_until_input(std::vector<Event>& events);
  void advance(std::vector<Event>& events);

  std::shared_ptr<const Scenario> scenario_;
  std::shared_ptr<const BundleSet> bundles_;
  SessionConfig config_;
  SessionState state_;
  RecordSink sink_;
};

struct StartedSession {
  DialogueSession session;
  std::vector<Event> events;
};

/// Validates the models against the scenario (throws PreconditionError
/// listing every mismatch) and emits the opening lines up to the first input.
StartedSession start_session(std::shared_ptr<const Scenario> scenario,
                             std::shared_ptr<const BundleSet> bundles, SessionConfig config,
                             std::string session_id);

/// Feeds each line through passthrough recognition. Throws PreconditionError
/// when the script runs out before the session ends; extra lines are ignored.
SessionState replay_script(std::shared_ptr<const Scenario> scenario,
                           std::shared_ptr<const BundleSet> bundles, SessionConfig config,
                           std::span<const std::string> lines,
                           std::string session_id = "replay");

/// Reads a replay script: one player line per row; blank rows and rows
/// starting with '#' are skipped.
std::vector<std::string> load_script(const std::filesystem::path& path);

// --- session log (JSONL) --------------------------------------------------------

std::string turn_record_to_json(const TurnRecord& record);
TurnRecord turn_record_from_json(std::string_view line);

/// Appends one line and flushes it to disk.
void append_turn_record(const std::filesystem::path& path, const TurnRecord& record);
std::vector<TurnRecord> read_session_log(const std::filesystem::path& path);

std::string event_to_json(const Event& event);

}  // namespace culsim
