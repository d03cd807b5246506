#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "culsim/dialogue.hpp"
#include "culsim/expert.hpp"
#include "culsim/scenario.hpp"

namespace httplib {
class Server;
}

namespace culsim {

/// Status code plus JSON body.
struct ApiResponse {
  int status = 200;
  std::string body;
};

struct ServiceConfig {
  /// Session logs go to `<data_dir>/sessions`, reports are read from
  /// `<data_dir>/reports/models.json`.
  std::filesystem::path data_dir = "data";
  double alpha = 0.5;
  int max_repeats = 2;
  /// Corruption rate for sessions in simulated_noise mode when a request
  /// carries no simulate_wer.
  double default_simulated_wer = 0.2;
  std::uint64_t noise_seed = 42;
  /// Served at "/" when set (the browser client build).
  std::optional<std::filesystem::path> static_dir;
};

/// Session lifecycle over HTTP/JSON. Handlers are safe to call concurrently;
/// requests for one session are serialized and a request that finds its
/// session busy gets 409.
class TrainingService {
 public:
  /// `bundles` may be null or empty; session creation then answers 503.
  TrainingService(ServiceConfig config, std::vector<std::shared_ptr<const Scenario>> scenarios,
                  std::shared_ptr<const BundleSet> bundles);

  ApiResponse create_session(std::string_view body);
  ApiResponse submit_input(std::string_view session_id, std::string_view body);
  ApiResponse session_log(std::string_view session_id) const;
  ApiResponse model_report() const;
  ApiResponse list_scenarios() const;

  /// Registers every endpoint on `server`.
  void mount(httplib::Server& server);

  std::size_t live_sessions() const;
  std::filesystem::path log_path(std::string_view session_id) const;
  std::filesystem::path report_path() const;

 private:
  struct Slot {
    std::mutex mutex;
    std::optional<DialogueSession> session;
    std::uint64_t turns = 0;
  };

  std::string new_session_id();

  ServiceConfig config_;
  std::map<std::string, std::shared_ptr<const Scenario>, std::less<>> scenarios_;
  std::shared_ptr<const BundleSet> bundles_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>, std::less<>> sessions_;
  std::uint64_t id_state_;
};

}  // namespace culsim
