#include <doctest.h>

#include "culsim/dialogue.hpp"
#include "culsim/errors.hpp"
#include "fixtures.hpp"

using namespace culsim;
using culsim::testing::bundled_scenario;

namespace {

std::shared_ptr<const BundleSet> knn_bundles() {
  static const auto b = culsim::testing::trained_bundles(KnnParams{});
  return b;
}

AsrResult heard(std::string text, double confidence) {
  return {std::move(text), confidence, AsrChannel::simulated_noise};
}

}  // namespace

TEST_SUITE("dialogue") {
  TEST_CASE("session opens with the briefing and waits for the player") {
    auto started = start_session(bundled_scenario(), knn_bundles(), {}, "t1");
    REQUIRE(started.events.size() == 2);
    CHECK(started.events[0].kind == EventKind::avatar_lines);
    CHECK(started.events[0].speaker == "Captain Heist");
    CHECK(started.events[1].kind == EventKind::guide_note);
    CHECK(started.session.state().phase == Phase::awaiting_player);
    CHECK(started.session.state().cursor == "ack_briefing");
  }

  TEST_CASE("repeat requests name the right avatar") {
    auto s = start_session(bundled_scenario(), knn_bundles(), {}, "t2").session;
    auto out = s.submit_input(heard("mumble", 0.1));
    REQUIRE(out.events.size() == 1);
    CHECK(out.events[0].kind == EventKind::repeat_request);
    CHECK(out.events[0].speaker == "Captain Heist");
    CHECK_FALSE(out.record.has_value());
    CHECK(s.state().pending_repeats == 1);

    out = s.submit_input(heard("Thanks for the information.", 0.9));
    CHECK(out.record.has_value());
    CHECK(out.record->section_id.empty());
    CHECK_FALSE(out.record->score.has_value());
    CHECK(s.state().cursor == "ep_greeting");
    CHECK(s.state().pending_repeats == 0);

    out = s.submit_input(heard("mumble", 0.2));
    CHECK(out.events.at(0).speaker == "Captain Wang");
    out = s.submit_input(heard("Good morning captain Wang.", 1.0));
    REQUIRE(out.record.has_value());
    CHECK(out.record->section_id == "s01");
    CHECK(out.record->score.has_value());
    CHECK(out.record->feedback.has_value());
    CHECK(out.events.at(0).kind == EventKind::feedback);
    CHECK_FALSE(out.events.at(0).score.has_value());
  }

  TEST_CASE("gating holds over random confidence streams") {
    Rng rng(1234);
    for (int trial = 0; trial < 40; ++trial) {
      SessionConfig cfg;
      cfg.alpha = rng.uniform();
      cfg.max_repeats = 1 + static_cast<int>(rng.below(3));
      cfg.debug_scores = rng.below(2) == 1;
      auto s = start_session(bundled_scenario(), knn_bundles(), cfg, "g").session;
      std::size_t records = 0, submits = 0;
      while (s.state().phase != Phase::ended) {
        REQUIRE(submits < 200);
        const int repeats_before = s.state().pending_repeats;
        const bool at_eval = std::holds_alternative<EvaluationPoint>(
            s.scenario().node(s.state().cursor).body);
        const double conf = rng.uniform();
        const auto out = s.submit_input(heard("good morning captain it is an honor", conf));
        ++submits;
        if (conf < cfg.alpha && repeats_before < cfg.max_repeats) {
          CHECK(out.repeat_requested());
          CHECK_FALSE(out.record.has_value());
          CHECK(s.state().pending_repeats == repeats_before + 1);
          continue;
        }
        REQUIRE(out.record.has_value());
        ++records;
        CHECK(s.state().pending_repeats == 0);
        CHECK(out.record->recognized.confidence == conf);
        if (conf < cfg.alpha) {
          CHECK_FALSE(out.record->score.has_value());
          CHECK_FALSE(out.record->feedback.has_value());
        } else {
          CHECK(out.record->score.has_value() == at_eval);
          CHECK(out.record->feedback.has_value() == at_eval);
        }
        for (const auto& e : out.events) {
          if (e.kind == EventKind::feedback) CHECK(e.score.has_value() == cfg.debug_scores);
        }
      }
      CHECK(records == 15);
      CHECK(s.state().log.size() == records);
      for (const auto& r : s.state().log) {
        if (r.recognized.confidence < cfg.alpha) CHECK_FALSE(r.score.has_value());
      }
    }
  }

  TEST_CASE("input after the end is refused") {
    const auto lines = load_script(culsim::testing::script_path());
    auto s = start_session(bundled_scenario(), knn_bundles(), {}, "end").session;
    TurnOutcome last;
    for (const auto& line : lines) {
      if (s.state().phase == Phase::ended) break;
      last = s.submit_input(recognize_passthrough(line));
    }
    CHECK(last.session_ended());
    CHECK(last.events.back().text == "The session has ended.");
    CHECK_THROWS_AS(s.submit_input(recognize_passthrough("hello?")), TurnGateError);
  }

  TEST_CASE("config and model validation") {
    SessionConfig bad;
    bad.alpha = 1.5;
    CHECK_THROWS_AS(start_session(bundled_scenario(), knn_bundles(), bad, "x"), PreconditionError);
    bad = {};
    bad.max_repeats = 0;
    CHECK_THROWS_AS(start_session(bundled_scenario(), knn_bundles(), bad, "x"), PreconditionError);
    auto partial = std::make_shared<BundleSet>(*knn_bundles());
    partial->erase("s07");
    try {
      start_session(bundled_scenario(), partial, {}, "x");
      FAIL("started without s07");
    } catch (const PreconditionError& e) {
      CHECK(std::string(e.what()).find("s07") != std::string::npos);
    }
    CHECK_THROWS_AS(start_session(bundled_scenario(), nullptr, {}, "x"), PreconditionError);
    auto s = start_session(bundled_scenario(), knn_bundles(), {}, "x").session;
    CHECK_THROWS_AS(s.submit_input(heard("x", 1.5)), PreconditionError);
  }

  TEST_CASE("replay of the bundled script logs every input node") {
    const auto lines = load_script(culsim::testing::script_path());
    CHECK(lines.size() == 15);
    const auto state = replay_script(bundled_scenario(), knn_bundles(), {}, lines);
    CHECK(state.phase == Phase::ended);
    REQUIRE(state.log.size() == 15);
    std::size_t scored = 0;
    for (const auto& r : state.log) scored += r.score.has_value() ? 1 : 0;
    CHECK(scored == 14);
    CHECK(state.log[1].raw_input == lines[1]);
    const std::vector<std::string> shortened(lines.begin(), lines.begin() + 5);
    CHECK_THROWS_AS(replay_script(bundled_scenario(), knn_bundles(), {}, shortened), PreconditionError);
  }

  TEST_CASE("turn records round trip through the log file") {
    culsim::testing::TempDir dir;
    const auto log = dir / "sessions/a.jsonl";
    auto s = start_session(bundled_scenario(), knn_bundles(), {}, "log").session;
    std::vector<TurnRecord> sunk;
    s.set_record_sink([&](const TurnRecord& r) {
      sunk.push_back(r);
      append_turn_record(log, r);
    });
    s.submit_input(heard("Thanks for the information.", 0.8), "Thanks for the information");
    s.submit_input(heard("hello captain wang", 0.3));
    s.submit_input(heard("Hello captain Wang, it's an honor.", 0.95));
    s.submit_input(heard("Are you the leader of the Chinese team? I am Lieutenant Smith.", 1.0));
    REQUIRE(sunk.size() == 3);
    CHECK(sunk == s.state().log);
    CHECK(read_session_log(log) == sunk);
    CHECK(sunk[0].raw_input == "Thanks for the information");
    for (const auto& r : sunk) CHECK(turn_record_from_json(turn_record_to_json(r)) == r);
    CHECK_THROWS(turn_record_from_json("{\"node\": 3}"));
  }

  TEST_CASE("event names round trip") {
    for (auto k : {EventKind::avatar_lines, EventKind::guide_note, EventKind::repeat_request,
                   EventKind::feedback, EventKind::session_ended}) {
      CHECK(parse_event_kind(to_string(k)) == k);
    }
    Event e{EventKind::feedback, "ep", "", "text", ScoreVector{"s01", {1, 0, 1}}};
    const auto j = event_to_json(e);
    CHECK(j.find("\"kind\":\"feedback\"") != std::string::npos);
    CHECK(j.find("\"score\"") != std::string::npos);
  }
}
