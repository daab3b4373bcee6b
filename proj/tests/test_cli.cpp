#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "meshreconf/cli/cli.hpp"
#include "meshreconf/io/io.hpp"

namespace meshreconf::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("meshreconf_cli_" + std::string(::testing::UnitTest::GetInstance()
                                                 ->current_test_info()
                                                 ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int call(std::vector<std::string> args) {
    args.insert(args.begin(), "meshreconf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // 2x2 grid, 90 degree steps, smallest horizon.
  std::string small_scenario() {
    const int code = call({"gen", "--topology", "grid", "--rows", "2", "--cols", "2",
                           "--sigma", "0", "--theta", "90", "--users", "40", "--seed",
                           "3", "-N", "1", "--slots", "0", "--out", dir_.string()});
    EXPECT_EQ(code, kExitOk) << err_.str();
    return path("scenario.json");
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, PlanValidateMetrics) {
  const std::string scenario = small_scenario();
  ASSERT_EQ(call({"plan", scenario, "--deterministic", "--out", path("a")}), kExitOk)
      << err_.str();
  for (const char* f : {"plan.json", "report.json", "solution.txt"}) {
    EXPECT_TRUE(fs::exists(path(std::string("a/") + f))) << f;
  }
  EXPECT_EQ(call({"validate", scenario, path("a/plan.json")}), kExitOk) << err_.str();
  ASSERT_EQ(call({"metrics", scenario, path("a/plan.json"), "--out", path("m")}), kExitOk);
  const std::string csv = io::read_file(path("m/metrics.csv"));
  EXPECT_EQ(csv.rfind("k,loss_Mbps,loss_fraction,active_links\n", 0), 0u);
  EXPECT_TRUE(fs::exists(path("m/metrics.json")));
}

TEST_F(CliTest, DeterministicPlansAreIdentical) {
  const std::string scenario = small_scenario();
  ASSERT_EQ(call({"plan", scenario, "--deterministic", "--out", path("a")}), kExitOk);
  ASSERT_EQ(call({"plan", scenario, "--deterministic", "--out", path("b")}), kExitOk);
  EXPECT_EQ(io::read_file(path("a/plan.json")), io::read_file(path("b/plan.json")));
  EXPECT_EQ(io::read_file(path("a/solution.txt")), io::read_file(path("b/solution.txt")));
}

TEST_F(CliTest, ExportLp) {
  const std::string scenario = small_scenario();
  ASSERT_EQ(call({"export-lp", scenario, "--out", path("lp")}), kExitOk);
  const std::string lp = io::read_file(path("lp/model.lp"));
  EXPECT_NE(lp.find("Minimize"), std::string::npos);
  EXPECT_NE(lp.find("End"), std::string::npos);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(call({"plan"}), kExitParse);
  EXPECT_EQ(call({"frobnicate"}), kExitParse);
  EXPECT_EQ(call({"plan", path("missing.json")}), kExitError);

  io::write_file(path("bad.json"), "{\"schema_version\": 1, \"bogus\": true}");
  EXPECT_EQ(call({"plan", path("bad.json")}), kExitParse);

  const std::string scenario = small_scenario();
  EXPECT_EQ(call({"plan", scenario, "--slots", "1", "--out", path("h")}), kExitInfeasible);

  ASSERT_EQ(call({"plan", scenario, "--deterministic", "--out", path("a")}), kExitOk);
  std::string plan = io::read_file(path("a/plan.json"));
  const auto at = plan.find("\"flow\": ");
  if (at != std::string::npos) {
    plan.insert(at + 8, "99999");
  } else {
    const auto cw = plan.find("\"cw\": [[0");
    ASSERT_NE(cw, std::string::npos);
    plan[cw + 9] = '1';
  }
  io::write_file(path("broken.json"), plan);
  EXPECT_EQ(call({"validate", scenario, path("broken.json")}), kExitInvalid);
}

}  // namespace
}  // namespace meshreconf::cli
