#include <doctest.h>

#include <httplib.h>
#include <json.hpp>
#include <sys/stat.h>

#include <fstream>
#include <thread>

#include "culsim/eval.hpp"
#include "culsim/service.hpp"
#include "fixtures.hpp"

using namespace culsim;
using nlohmann::json;
using culsim::testing::TempDir;

namespace {

std::shared_ptr<const BundleSet> knn_bundles() {
  static const auto b = culsim::testing::trained_bundles(KnnParams{});
  return b;
}

TrainingService make_service(const std::filesystem::path& dir,
                             std::shared_ptr<const BundleSet> bundles = knn_bundles()) {
  ServiceConfig cfg;
  cfg.data_dir = dir;
  return TrainingService(cfg, {culsim::testing::bundled_scenario()}, std::move(bundles));
}

std::string create(TrainingService& svc, const json& body = {{"scenario_id", "dme"}}) {
  const auto r = svc.create_session(body.dump());
  REQUIRE(r.status == 201);
  return json::parse(r.body).at("session_id").get<std::string>();
}

json input(const std::string& text) { return {{"text", text}}; }

/// Real server on an ephemeral port, stopped on destruction.
class LiveServer {
 public:
  explicit LiveServer(TrainingService& svc) {
    svc.mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("session creation statuses") {
    TempDir dir;
    auto svc = make_service(dir.path());
    CHECK(svc.create_session("{oops").status == 400);
    CHECK(svc.create_session("{}").status == 422);
    CHECK(svc.create_session(R"({"scenario_id":"dme","alpha":1.5})").status == 422);
    CHECK(svc.create_session(R"({"scenario_id":"dme","asr_mode":"telepathy"})").status == 422);
    CHECK(svc.create_session(R"({"scenario_id":"dme","asr_mode":"external"})").status == 422);
    CHECK(svc.create_session(R"({"scenario_id":"dme","debug_scores":"yes"})").status == 422);
    CHECK(svc.create_session(R"({"scenario_id":"nope"})").status == 404);

    const auto ok = svc.create_session(R"({"scenario_id":"dme"})");
    REQUIRE(ok.status == 201);
    const auto body = json::parse(ok.body);
    CHECK(body["phase"] == "awaiting_player");
    CHECK(body["events"].size() == 2);
    CHECK(body["events"][0]["speaker"] == "Captain Heist");
    CHECK(std::filesystem::exists(svc.log_path(body["session_id"].get<std::string>())));

    auto empty = make_service(dir.path(), std::make_shared<BundleSet>());
    CHECK(empty.create_session(R"({"scenario_id":"dme"})").status == 503);
    auto none = make_service(dir.path(), nullptr);
    CHECK(none.create_session(R"({"scenario_id":"dme"})").status == 503);
    auto partial = std::make_shared<BundleSet>(*knn_bundles());
    partial->erase("s03");
    auto mismatched = make_service(dir.path(), partial);
    CHECK(mismatched.create_session(R"({"scenario_id":"dme"})").status == 503);
    CHECK(json::parse(mismatched.list_scenarios().body)["scenarios"][0]["models_ready"] == false);
  }

  TEST_CASE("input statuses and the log after three inputs") {
    TempDir dir;
    auto svc = make_service(dir.path());
    const auto id = create(svc);
    CHECK(svc.submit_input("ghost", input("hi").dump()).status == 404);
    CHECK(svc.submit_input(id, "not json").status == 400);
    CHECK(svc.submit_input(id, "{}").status == 422);
    CHECK(svc.submit_input(id, R"({"text":"hi","simulate_wer":0.95})").status == 422);

    auto r = svc.submit_input(id, input("Thanks for the information.").dump());
    CHECK(r.status == 200);
    r = svc.submit_input(id, input("Good morning captain Wang, it's an honor.").dump());
    REQUIRE(r.status == 200);
    const auto events = json::parse(r.body)["events"];
    CHECK(events[0]["kind"] == "feedback");
    CHECK_FALSE(events[0].contains("score"));
    r = svc.submit_input(id, input("Are you the leader of the Chinese component?").dump());
    CHECK(r.status == 200);

    const auto log = svc.session_log(id);
    REQUIRE(log.status == 200);
    const auto records = json::parse(log.body)["records"];
    REQUIRE(records.size() == 3);
    CHECK(records[0]["section"].is_null());
    CHECK(records[1]["section"] == "s01");
    CHECK(records[1]["score"].size() == 3);
    CHECK(records[1]["raw_input"] == "Good morning captain Wang, it's an honor.");
    CHECK(svc.session_log("../../etc/passwd").status == 404);
    CHECK(svc.session_log("abcdef").status == 404);
  }

  TEST_CASE("debug scores and simulated noise") {
    TempDir dir;
    auto svc = make_service(dir.path());
    const auto id = create(svc, {{"scenario_id", "dme"}, {"debug_scores", true}, {"alpha", 0.0}});
    svc.submit_input(id, input("ok").dump());
    const auto r = svc.submit_input(id, json{{"text", "Good morning captain Wang"}, {"simulate_wer", 0.5}}.dump());
    REQUIRE(r.status == 200);
    CHECK(json::parse(r.body)["events"][0]["score"].size() == 3);
    const auto records = json::parse(svc.session_log(id).body)["records"];
    CHECK(records[1]["recognized"]["channel"] == "simulated_noise");
  }

  TEST_CASE("ended sessions answer 410") {
    TempDir dir;
    auto svc = make_service(dir.path());
    const auto id = create(svc);
    std::string phase;
    for (const auto& line : load_script(culsim::testing::script_path())) {
      const auto r = svc.submit_input(id, input(line).dump());
      REQUIRE(r.status == 200);
      phase = json::parse(r.body)["phase"];
    }
    CHECK(phase == "ended");
    CHECK(svc.submit_input(id, input("hello?").dump()).status == 410);
    CHECK(json::parse(svc.session_log(id).body)["records"].size() == 15);
  }

  TEST_CASE("a second request while one is in flight gets 409") {
    TempDir dir;
    auto svc = make_service(dir.path());
    const auto id = create(svc);
    // Swap the log for a fifo so the first request blocks inside the session
    // until this test reads the record it writes.
    const auto log = svc.log_path(id);
    std::filesystem::remove(log);
    REQUIRE(::mkfifo(log.c_str(), 0600) == 0);
    ApiResponse first;
    std::thread t([&] { first = svc.submit_input(id, input("Thanks.").dump()); });
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    CHECK(svc.submit_input(id, input("Again").dump()).status == 409);
    std::string line;
    {
      std::ifstream reader(log);
      std::getline(reader, line);
    }
    t.join();
    CHECK(first.status == 200);
    CHECK(json::parse(line)["raw_input"] == "Thanks.");
  }

  TEST_CASE("logs survive a restart") {
    TempDir dir;
    std::string id;
    {
      auto svc = make_service(dir.path());
      id = create(svc);
      svc.submit_input(id, input("Thanks for the information.").dump());
    }
    auto restarted = make_service(dir.path());
    CHECK(restarted.live_sessions() == 0);
    const auto log = restarted.session_log(id);
    REQUIRE(log.status == 200);
    CHECK(json::parse(log.body)["records"].size() == 1);
    CHECK(restarted.submit_input(id, input("hello").dump()).status == 404);
    CHECK(create(restarted) != id);
  }

  TEST_CASE("model report") {
    TempDir dir;
    auto svc = make_service(dir.path());
    const auto missing = svc.model_report();
    CHECK(missing.status == 404);
    CHECK(json::parse(missing.body)["error"].get<std::string>().find("evaluate") != std::string::npos);
    std::vector<ReportRow> rows;
    for (int i = 1; i <= 14; ++i) rows.push_back({std::to_string(i), 2, 80.0 + i, 75.0 + i, 85.0 - i, 10.0 + 2 * i});
    write_report(svc.report_path(), table2_report(rows));
    const auto ok = svc.model_report();
    CHECK(ok.status == 200);
    const auto body = json::parse(ok.body);
    CHECK(body["rows"].size() == 14);
    CHECK(body["mean"]["f1"].get<double>() == doctest::Approx(87.5));
    CHECK(body["std"].contains("wer"));
    std::ofstream(svc.report_path()) << "{broken";
    CHECK(svc.model_report().status == 500);
  }

  TEST_CASE("endpoints over http") {
    TempDir dir;
    auto svc = make_service(dir.path());
    LiveServer server(svc);
    auto c = server.client();

    auto res = c.Get("/api/scenarios");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto list = json::parse(res->body)["scenarios"];
    CHECK(list[0]["id"] == "dme");
    CHECK(list[0]["sections"].size() == 14);
    CHECK(list[0]["models_ready"] == true);

    res = c.Post("/api/sessions", R"({"scenario_id":"dme"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    CHECK(res->get_header_value("Content-Type").find("application/json") != std::string::npos);
    const auto id = json::parse(res->body)["session_id"].get<std::string>();

    for (const char* text : {"Thanks.", "Hello captain Wang.", "Are you the leader?"}) {
      res = c.Post(("/api/sessions/" + id + "/input").c_str(), input(text).dump(), "application/json");
      REQUIRE(res);
      CHECK(res->status == 200);
    }
    res = c.Get(("/api/sessions/" + id + "/log").c_str());
    REQUIRE(res);
    CHECK(json::parse(res->body)["records"].size() == 3);

    res = c.Post("/api/sessions/zzz/input", input("x").dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 404);
    res = c.Post("/api/sessions", R"({"scenario_id":"dme","alpha":-1})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    res = c.Get("/api/reports/models");
    REQUIRE(res);
    CHECK(res->status == 404);
  }
}
