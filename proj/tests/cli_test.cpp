#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("graphon_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    const std::string cmd = std::string(GRAPHON_CLI_PATH) + " " + args + " > " +
                            (dir_ / "stdout.txt").string() + " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path out(const std::string& name) const { return dir_ / name; }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::vector<std::vector<std::string>> csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      rows.push_back(cells);
    }
    return rows;
  }

  fs::path dir_;
};

TEST_F(CliTest, EigenMatchesAnalyticValues) {
  ASSERT_EQ(run("eigen --graphon minmax --M 1000 --k 3 --out " + out("e").string()), 0);
  const auto rows = csv(out("e") / "eigenvalues.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0][0], "index");
  for (int h = 1; h <= 3; ++h)
    EXPECT_NEAR(std::stod(rows[static_cast<std::size_t>(h)][1]),
                1.0 / (std::numbers::pi * std::numbers::pi * h * h), 1e-3);
  EXPECT_EQ(csv(out("e") / "eigenfunctions.csv").size(), 1001u);
}

TEST_F(CliTest, EmptyNetworkGivesStandaloneProfile) {
  ASSERT_EQ(run("solve-network --er 0 --N 20 --seed 3 --out " + out("s").string()), 0);
  const auto rows = csv(out("s") / "equilibrium.csv");
  ASSERT_EQ(rows.size(), 21u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_DOUBLE_EQ(std::stod(rows[i][2]), 1.0);
}

TEST_F(CliTest, SolveGraphonErClosedForm) {
  ASSERT_EQ(run("solve-graphon --er 0.5 --alpha 0.5 --M 50 --out " + out("g").string()), 0);
  const auto rows = csv(out("g") / "equilibrium.csv");
  ASSERT_EQ(rows.size(), 51u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_NEAR(std::stod(rows[i][1]), 1.0 / 0.75, 1e-10);
}

TEST_F(CliTest, DistanceExperimentRerunsAreByteIdentical) {
  const std::string args = "distance-exp --Ns 20,40 --trials 3 --M 200 --seed 9 --out ";
  ASSERT_EQ(run(args + out("a").string() + " --jobs 1"), 0);
  ASSERT_EQ(run(args + out("b").string() + " --jobs 2"), 0);
  for (const char* f : {"distances.csv", "distance_stats.csv", "rate_fit.csv", "manifest.json"})
    EXPECT_EQ(slurp(out("a") / f), slurp(out("b") / f)) << f;
}

TEST_F(CliTest, ManifestRecordsResolvedConfig) {
  ASSERT_EQ(run("solve-graphon --er 0.3 --M 20 --seed 4 --out " + out("m").string()), 0);
  const auto m = json::parse(slurp(out("m") / "manifest.json"));
  EXPECT_EQ(m["subcommand"], "solve-graphon");
  EXPECT_EQ(m["seed"], 4);
  EXPECT_DOUBLE_EQ(m["config"]["alpha"].get<double>(), 0.5);
  EXPECT_EQ(m["config"]["M"], 20);
  EXPECT_TRUE(m["versions"].contains("eigen"));
  EXPECT_EQ(m["outputs"].size(), 2u);
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  std::ofstream(out("cfg.json")) << R"({"er": 0.5, "alpha": 0.9, "M": 10})";
  ASSERT_EQ(run("solve-graphon --config " + out("cfg.json").string() + " --alpha 0.5 --out " +
                out("c").string()),
            0);
  const auto m = json::parse(slurp(out("c") / "manifest.json"));
  EXPECT_DOUBLE_EQ(m["config"]["alpha"].get<double>(), 0.5);
  EXPECT_EQ(m["config"]["M"], 10);
  const auto rows = csv(out("c") / "equilibrium.csv");
  EXPECT_NEAR(std::stod(rows[1][1]), 1.0 / 0.75, 1e-10);
}

TEST_F(CliTest, InterventionPoliciesWritten) {
  ASSERT_EQ(run("intervene --N 30 --seed 2 --out " + out("i").string()), 0);
  const auto rows = csv(out("i") / "interventions.csv");
  ASSERT_EQ(rows.size(), 6u);
  double opt = 0.0, best_other = 0.0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double w = std::stod(rows[r][1]);
    if (rows[r][0] == "optimal") opt = w;
    else best_other = std::max(best_other, w);
  }
  EXPECT_GE(opt, best_other - 1e-12);
}

TEST_F(CliTest, JsonFormat) {
  ASSERT_EQ(run("bne-epsilon --Ns 20 --trials 50 --M 100 --format json --out " + out("j").string()), 0);
  const auto j = json::parse(slurp(out("j") / "epsilon.json"));
  ASSERT_EQ(j.size(), 1u);
  EXPECT_GT(j[0]["epsilon_hat"].get<double>(), 0.0);
}

TEST_F(CliTest, ValidationErrorsExitWithOne) {
  EXPECT_EQ(run("eigen --no-such-flag"), 1);
  EXPECT_EQ(run("solve-graphon --er 0.5 --alpha 3 --out " + out("x").string()), 1);
  EXPECT_EQ(run("solve-graphon --er 1.5 --out " + out("x").string()), 1);
  EXPECT_EQ(run("eigen --M abc --out " + out("x").string()), 1);
  std::ofstream(out("bad.json")) << R"({"bogus": 1})";
  EXPECT_EQ(run("eigen --config " + out("bad.json").string() + " --out " + out("x").string()), 1);
  EXPECT_EQ(run(""), 1);
}

TEST_F(CliTest, IterationLimitExitsWithTwo) {
  // star network with strong substitutes: the hub is pushed to zero, so the
  // solver has to iterate
  json m = json::array();
  for (int i = 0; i < 5; ++i) {
    json row = json::array();
    for (int j = 0; j < 5; ++j) row.push_back((i == 0) != (j == 0) ? 1.0 : 0.0);
    m.push_back(row);
  }
  std::ofstream(out("star.json")) << json{{"matrix", m}}.dump();
  const std::string base = "solve-network --matrix " + out("star.json").string() + " --alpha -2.4 ";
  EXPECT_EQ(run(base + "--max-iter 2 --out " + out("x").string()), 2);
  ASSERT_EQ(run(base + "--out " + out("y").string()), 0);
  const auto rows = csv(out("y") / "diagnostics.csv");
  EXPECT_EQ(rows[1][0], "br-iteration");
}

TEST_F(CliTest, HelpExitsWithZero) { EXPECT_EQ(run("--help"), 0); }

}  // namespace
