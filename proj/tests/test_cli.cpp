#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "test_util.hpp"
#include "wbdc/cli.hpp"

using namespace wbdc;
using namespace wbdc::testing;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "wbdc");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> v;
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

int columns(const std::string& line) { return 1 + static_cast<int>(std::count(line.begin(), line.end(), ',')); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("wbdc_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, RunWritesOneRowPerStep) {
  const fs::path out = dir_ / "trace.csv";
  const CliResult r = cli({"run", "--scenario", data_path("scenarios/biped_stand.json"), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(out);
  ASSERT_GT(rows.size(), 1u);
  // Header plus one row per control step.
  const Scenario sc = load_scenario(data_path("scenarios/biped_stand.json"));
  EXPECT_EQ(static_cast<int>(rows.size()), sc.num_steps() + 1);
  EXPECT_EQ(rows.front().substr(0, 2), "t,");
  for (const auto& row : rows) EXPECT_EQ(columns(row), columns(rows.front()));
}

TEST_F(Cli, MissingScenarioIsUsageError) {
  const CliResult r = cli({"run", "--scenario", (dir_ / "nope.json").string(), "--out", (dir_ / "x.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(Cli, BadArgumentsAreUsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"fly"}).code, 2);
  EXPECT_EQ(cli({"run", "--out", "x.csv"}).code, 2);
  EXPECT_EQ(cli({"bench", "--scenario", data_path("scenarios/biped_stand.json"), "--iters", "10", "--out",
                 (dir_ / "b.csv").string()})
                .code,
            2);
}

TEST_F(Cli, ControllerFailureExitsWithOne) {
  // The sway scenario with a hand as the first task.
  std::ifstream in(data_path("scenarios/humanoid_sway.json"));
  std::stringstream ss;
  ss << in.rdbuf();
  std::string doc = ss.str();
  const std::string rel = "\"../models/";
  doc.replace(doc.find(rel), rel.size(), "\"" + data_path("models/"));
  const std::string first = "\"type\": \"centroidal_momentum\"";
  ASSERT_NE(doc.find(first), std::string::npos);
  doc.replace(doc.find(first), first.size(), "\"type\": \"frame_position\", \"frame\": \"r_hand\"");
  const fs::path scen = dir_ / "hand_first.json";
  std::ofstream(scen) << doc;

  const fs::path out = dir_ / "trace.csv";
  const CliResult r = cli({"run", "--scenario", scen.string(), "--out", out.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("span"), std::string::npos) << r.err;
  // The partial trace still carries its header.
  EXPECT_GE(lines(out).size(), 1u);
}

TEST_F(Cli, BenchWritesOneRowPerTaskSet) {
  const fs::path out = dir_ / "bench.csv";
  const CliResult r = cli({"bench", "--scenario", data_path("scenarios/humanoid_bench.json"), "--iters", "100",
                           "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows.front(), "task_set,mean_ms,sd_ms,iterations");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(columns(rows[i]), 4);
}

TEST_F(Cli, BinaryExitCodes) {
  const std::string exe = WBDC_CLI_PATH;
  const auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  EXPECT_EQ(status(exe + " --help"), 0);
  EXPECT_EQ(status(exe + " run --scenario " + (dir_ / "none.json").string() + " --out " + (dir_ / "o.csv").string()), 2);
  EXPECT_EQ(status(exe + " run --scenario " + data_path("scenarios/coupled_arm_reach.json") + " --out " +
                   (dir_ / "o.csv").string()),
            0);
}
