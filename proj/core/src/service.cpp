#include "culsim/service.hpp"

#include <httplib.h>

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "culsim/asr.hpp"
#include "culsim/errors.hpp"
#include "culsim/util.hpp"
#include "json_io.hpp"

namespace culsim {

using nlohmann::json;

namespace {

ApiResponse reply(int status, const json& body) { return {status, body.dump()}; }

ApiResponse error_reply(int status, std::string message) {
  return reply(status, json{{"error", std::move(message)}});
}

json events_json(const std::vector<Event>& events) {
  json out = json::array();
  for (const auto& e : events) out.push_back(detail::event_to_json(e));
  return out;
}

bool valid_session_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

TrainingService::TrainingService(ServiceConfig config,
                                 std::vector<std::shared_ptr<const Scenario>> scenarios,
                                 std::shared_ptr<const BundleSet> bundles)
    : config_(std::move(config)), bundles_(std::move(bundles)) {
  for (auto& s : scenarios) {
    if (!s) throw PreconditionError("TrainingService: null scenario");
    const std::string id = s->id();
    if (!scenarios_.emplace(id, std::move(s)).second) {
      throw PreconditionError("TrainingService: duplicate scenario id '" + id + "'");
    }
  }
  std::random_device rd;
  id_state_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
              static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
}

std::filesystem::path TrainingService::log_path(std::string_view session_id) const {
  return config_.data_dir / "sessions" / (std::string(session_id) + ".jsonl");
}

std::filesystem::path TrainingService::report_path() const {
  return config_.data_dir / "reports" / "models.json";
}

std::size_t TrainingService::live_sessions() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

// Called with sessions_mutex_ held.
std::string TrainingService::new_session_id() {
  for (;;) {
    id_state_ = mix64(id_state_ + 0x9e3779b97f4a7c15ULL);
    std::string id = to_hex(id_state_).substr(0, 12);
    if (!sessions_.contains(id) && !std::filesystem::exists(log_path(id))) return id;
  }
}

ApiResponse TrainingService::create_session(std::string_view body) {
  json req;
  try {
    req = json::parse(body.empty() ? std::string_view("{}") : body);
  } catch (const json::exception&) {
    return error_reply(400, "request body is not valid JSON");
  }
  if (!req.is_object()) return error_reply(400, "request body must be a JSON object");

  SessionConfig cfg;
  cfg.alpha = config_.alpha;
  cfg.max_repeats = config_.max_repeats;
  if (!req.contains("scenario_id") || !req["scenario_id"].is_string()) {
    return error_reply(422, "scenario_id (string) is required");
  }
  if (req.contains("alpha")) {
    if (!req["alpha"].is_number()) return error_reply(422, "alpha must be a number");
    cfg.alpha = req["alpha"].get<double>();
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) return error_reply(422, "alpha must lie in [0, 1]");
  }
  if (req.contains("asr_mode")) {
    if (!req["asr_mode"].is_string()) return error_reply(422, "asr_mode must be a string");
    try {
      cfg.asr_mode = parse_asr_channel(req["asr_mode"].get<std::string>());
    } catch (const PreconditionError& e) {
      return error_reply(422, e.what());
    }
    if (cfg.asr_mode == AsrChannel::external) {
      return error_reply(422, "no external recognizer is configured on this server");
    }
  }
  if (req.contains("debug_scores")) {
    if (!req["debug_scores"].is_boolean()) return error_reply(422, "debug_scores must be a boolean");
    cfg.debug_scores = req["debug_scores"].get<bool>();
  }

  const auto scenario_id = req["scenario_id"].get<std::string>();
  auto sc = scenarios_.find(scenario_id);
  if (sc == scenarios_.end()) return error_reply(404, "unknown scenario '" + scenario_id + "'");
  if (!bundles_ || bundles_->empty()) return error_reply(503, "expert models are not loaded");
  if (!validate_against_models(*sc->second, *bundles_).empty()) {
    return error_reply(503, "loaded expert models do not match scenario '" + scenario_id + "'");
  }

  auto slot = std::make_shared<Slot>();
  std::string id;
  {
    std::lock_guard lock(sessions_mutex_);
    id = new_session_id();
    sessions_.emplace(id, slot);
  }
  std::lock_guard slot_lock(slot->mutex);
  try {
    auto started = start_session(sc->second, bundles_, cfg, id);
    const auto path = log_path(id);
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary | std::ios::app).flush();
    started.session.set_record_sink([path](const TurnRecord& r) { append_turn_record(path, r); });
    const Phase phase = started.session.state().phase;
    slot->session.emplace(std::move(started.session));
    return reply(201, json{{"session_id", id},
                           {"phase", std::string(to_string(phase))},
                           {"events", events_json(started.events)}});
  } catch (const std::exception& e) {
    std::lock_guard lock(sessions_mutex_);
    sessions_.erase(id);
    return error_reply(500, e.what());
  }
}

ApiResponse TrainingService::submit_input(std::string_view session_id, std::string_view body) {
  std::shared_ptr<Slot> slot;
  {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(session_id);
    if (it != sessions_.end()) slot = it->second;
  }
  if (!slot) return error_reply(404, "unknown session '" + std::string(session_id) + "'");

  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception&) {
    return error_reply(400, "request body is not valid JSON");
  }
  if (!req.is_object() || !req.contains("text") || !req["text"].is_string()) {
    return error_reply(422, "text (string) is required");
  }
  std::optional<double> simulate_wer;
  if (req.contains("simulate_wer") && !req["simulate_wer"].is_null()) {
    if (!req["simulate_wer"].is_number()) return error_reply(422, "simulate_wer must be a number");
    simulate_wer = req["simulate_wer"].get<double>();
    if (!(*simulate_wer >= 0.0 && *simulate_wer <= 0.9)) {
      return error_reply(422, "simulate_wer must lie in [0, 0.9]");
    }
  }

  std::unique_lock slot_lock(slot->mutex, std::try_to_lock);
  if (!slot_lock.owns_lock()) return error_reply(409, "session is busy with another request");
  if (!slot->session) return error_reply(404, "unknown session '" + std::string(session_id) + "'");
  DialogueSession& session = *slot->session;
  if (session.state().phase == Phase::ended) return error_reply(410, "session has ended");

  const auto text = req["text"].get<std::string>();
  AsrResult recognized;
  if (!simulate_wer && session.config().asr_mode == AsrChannel::simulated_noise) {
    simulate_wer = config_.default_simulated_wer;
  }
  if (simulate_wer) {
    const auto seed = derive_seed(derive_seed(config_.noise_seed, session_id), slot->turns);
    recognized = corrupt(text, *simulate_wer, seed);
  } else {
    recognized = recognize_passthrough(text);
  }
  ++slot->turns;

  try {
    auto outcome = session.submit_input(recognized, text);
    return reply(200, json{{"phase", std::string(to_string(session.state().phase))},
                           {"events", events_json(outcome.events)}});
  } catch (const TurnGateError& e) {
    return error_reply(409, e.what());
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

ApiResponse TrainingService::session_log(std::string_view session_id) const {
  if (!valid_session_id(session_id)) {
    return error_reply(404, "unknown session '" + std::string(session_id) + "'");
  }
  const auto path = log_path(session_id);
  if (!std::filesystem::exists(path)) {
    return error_reply(404, "unknown session '" + std::string(session_id) + "'");
  }
  try {
    json records = json::array();
    for (const auto& r : read_session_log(path)) records.push_back(detail::turn_record_to_json(r));
    return reply(200, json{{"session_id", session_id}, {"records", std::move(records)}});
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

ApiResponse TrainingService::model_report() const {
  const auto path = report_path();
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return error_reply(404, "no model report yet; run `culsim evaluate --report " + path.string() +
                                "` to produce one");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return reply(200, json::parse(ss.str()));
  } catch (const json::exception&) {
    return error_reply(500, "model report at " + path.string() + " is not valid JSON");
  }
}

ApiResponse TrainingService::list_scenarios() const {
  json list = json::array();
  for (const auto& [id, s] : scenarios_) {
    json sections = json::array();
    for (const auto* ep : s->evaluation_points()) sections.push_back(ep->section_id());
    list.push_back({{"id", id},
                    {"title", s->title()},
                    {"scenes", s->scenes().size()},
                    {"input_nodes", s->input_node_count()},
                    {"sections", std::move(sections)},
                    {"models_ready", bundles_ && validate_against_models(*s, *bundles_).empty()}});
  }
  return reply(200, json{{"scenarios", std::move(list)}});
}

void TrainingService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Post("/api/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, create_session(req.body));
  });
  server.Post(R"(/api/sessions/([^/]+)/input)",
              [this, send](const httplib::Request& req, httplib::Response& res) {
                send(res, submit_input(req.matches[1].str(), req.body));
              });
  server.Get(R"(/api/sessions/([^/]+)/log)",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, session_log(req.matches[1].str()));
             });
  server.Get("/api/reports/models", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, model_report());
  });
  server.Get("/api/scenarios", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, list_scenarios());
  });
  if (config_.static_dir) server.set_mount_point("/", config_.static_dir->string());
}

}  // namespace culsim
