#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "culsim/dialogue.hpp"
#include "fixtures.hpp"

using culsim::testing::TempDir;
using culsim::testing::read_text;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "culsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = culsim::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string corpus() { return culsim::testing::corpus_path().string(); }
std::string scenario() { return culsim::testing::scenario_path().string(); }

Run train_knn(const std::filesystem::path& out) {
  return cli({"train", "--corpus", corpus(), "--scenario", scenario(), "--model", "knn", "--out",
              out.string(), "--created-at", culsim::testing::kPinnedTimestamp});
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and usage errors") {
    auto r = cli({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("train") != std::string::npos);
    CHECK(cli({"train", "--help"}).code == 0);
    CHECK(cli({"frobnicate"}).code == 2);
    r = cli({"train", "--corpus", corpus(), "--scenario", scenario(), "--model", "svm", "--out", "x"});
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
    CHECK(cli({"train", "--model", "knn"}).code == 2);
  }

  TEST_CASE("training is reproducible and evaluation writes both report files") {
    TempDir dir;
    REQUIRE(train_knn(dir / "a").code == 0);
    REQUIRE(train_knn(dir / "b").code == 0);
    for (const char* s : {"s01", "s08", "s14"}) {
      const std::string name = std::string(s) + ".bundle.json";
      CHECK(read_text(dir / ("a/" + name)) == read_text(dir / ("b/" + name)));
    }

    auto r = cli({"evaluate", "--corpus", corpus(), "--models", (dir / "a").string(), "--split", "0",
                  "--report", (dir / "r.json").string()});
    CHECK(r.code == 1);
    r = cli({"evaluate", "--corpus", corpus(), "--models", (dir / "a").string(), "--report",
             (dir / "r.json").string()});
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(read_text(dir / "r.json"));
    CHECK(report["rows"].size() == 14);
    CHECK(read_text(dir / "r.json.txt").find("Std. Deviation") != std::string::npos);

    r = cli({"simulate", "--scenario", scenario(), "--script", culsim::testing::script_path().string(),
             "--models", (dir / "a").string(), "--log", (dir / "log.jsonl").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Captain Wang:") != std::string::npos);
    CHECK(r.out.find("Feedback:") != std::string::npos);
    CHECK(r.out.find("The session has ended.") != std::string::npos);
    CHECK(culsim::read_session_log(dir / "log.jsonl").size() == 15);
  }

  TEST_CASE("missing inputs fail cleanly") {
    TempDir dir;
    auto r = cli({"train", "--corpus", (dir / "none.jsonl").string(), "--scenario", scenario(),
                  "--model", "knn", "--out", (dir / "m").string()});
    CHECK(r.code == 1);
    CHECK_FALSE(std::filesystem::exists(dir / "m/s01.bundle.json"));
    r = cli({"simulate", "--scenario", scenario(), "--script", culsim::testing::script_path().string(),
             "--models", (dir / "nothing").string()});
    CHECK(r.code == 1);
  }
}
