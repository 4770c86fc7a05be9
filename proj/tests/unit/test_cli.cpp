#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "costorm/cli.hpp"
#include "costorm/event_log.hpp"
#include "helpers.hpp"

using namespace costorm;
using costorm::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"bogus"}).code, 2);
  auto r = cli({"session", "run", "--topic", "x", "--no-such-flag"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--no-such-flag"), std::string::npos);
  EXPECT_EQ(cli({"session", "run"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, RuntimeErrorsExitOne) {
  auto r = cli({"session", "run", "--topic", "x", "--scripted", costorm::testing::fixtures_dir(),
                "--inject-at", "nonsense"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
}

TEST(Cli, RunReplayAndReport) {
  TempDir dir;
  const auto fx = costorm::testing::fixtures_dir();
  auto run = cli({"session", "run", "--topic", "AlphaFold 3", "--goal", "Learn", "--auto-turns", "8",
                  "--inject-at", "4:What about safety?", "--scripted", fx, "--log", dir.file("log.jsonl"),
                  "--snapshot", dir.file("snap.json"), "--report", dir.file("report.md")});
  ASSERT_EQ(run.code, 0) << run.err;
  EXPECT_NE(run.out.find("[4] User (Original Question): What about safety?"), std::string::npos)
      << run.out;
  EXPECT_EQ(slurp(dir.file("report.md")).rfind("# AlphaFold 3\n", 0), 0u);

  auto replay = cli({"session", "replay", "--log", dir.file("log.jsonl"), "--scripted", fx,
                     "--expect-snapshot", dir.file("snap.json"), "--out", dir.file("replayed.json")});
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_NE(replay.out.find("snapshot identical"), std::string::npos);
  EXPECT_EQ(slurp(dir.file("replayed.json")), slurp(dir.file("snap.json")));

  auto rep = cli({"report", "--log", dir.file("log.jsonl"), "--scripted", fx, "--json",
                  dir.file("report.json")});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_EQ(rep.out, slurp(dir.file("report.md")));
  EXPECT_EQ(Json::parse(slurp(dir.file("report.json")))["title"], "AlphaFold 3");
}

TEST(Cli, ReplayRejectsForeignSnapshot) {
  TempDir dir;
  const auto fx = costorm::testing::fixtures_dir();
  ASSERT_EQ(cli({"session", "run", "--topic", "AlphaFold 3", "--auto-turns", "2", "--scripted", fx,
                 "--log", dir.file("log.jsonl")})
                .code,
            0);
  std::ofstream(dir.file("other.json")) << "{}\n";
  EXPECT_EQ(cli({"session", "replay", "--log", dir.file("log.jsonl"), "--scripted", fx,
                 "--expect-snapshot", dir.file("other.json")})
                .code,
            1);
}

TEST(Cli, EvalRunWritesLogsAndCsv) {
  TempDir dir;
  auto r = cli({"eval", "run", "--cases", costorm::testing::source_path("data/wildseek_sample.jsonl"),
                "--pipeline", "both", "--budget", "5", "--limit", "2", "--jobs", "2", "--scripted",
                costorm::testing::fixtures_dir(), "--logs-dir", dir.path.string(), "--summary",
                dir.file("summary.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
  for (const char* p : {"costorm_0", "costorm_1", "rag_0", "rag_1"}) {
    auto events = EventLog::read_jsonl(dir.file(std::string(p) + ".events.jsonl"));
    EXPECT_EQ(std::count_if(events.begin(), events.end(), [](const Event& e) { return e.type == "search"; }),
              5)
        << p;
  }
  auto sum = Json::parse(slurp(dir.file("summary.json")));
  EXPECT_EQ(sum["rag"]["cases"], 2);
}

TEST(Cli, EvalRejectsBadCases) {
  TempDir dir;
  std::ofstream(dir.file("bad.jsonl")) << R"({"domain":"d","topic":"t"})" << "\n";
  auto r = cli({"eval", "run", "--cases", dir.file("bad.jsonl"), "--scripted",
                costorm::testing::fixtures_dir()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 1"), std::string::npos);
}
