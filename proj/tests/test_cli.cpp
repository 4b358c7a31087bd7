#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const std::string kCli = FAIRBARY_CLI_PATH;

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + kCli + " " + args + " --quiet 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream is(slurp(p));
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fairbary_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  // Simulated translation data with its truth sidecar in <dir>/sim.
  void simulate(const std::string& n = "400,400") {
    ASSERT_EQ(run("simulate --seed 3 --n " + n + " --output " + p("sim")), 0);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateWritesOneRowPerSample) {
  ASSERT_EQ(run("simulate --seed 1 --n 100,100 --output " + p("sim")), 0);
  const auto rows = lines(p("sim/data.csv"));
  EXPECT_EQ(rows.size(), 201u);
  EXPECT_EQ(rows[0], "group,y,x1");
  EXPECT_TRUE(fs::exists(p("sim/truth.json")));
  EXPECT_TRUE(fs::exists(p("sim/resolved_config.json")));
}

TEST_F(Cli, SeedFromEnvironmentMatchesFlag) {
  ASSERT_EQ(run("simulate --n 50,50 --output " + p("a"), "FAIRBARY_SEED=11"), 0);
  ASSERT_EQ(run("simulate --seed 11 --n 50,50 --output " + p("b")), 0);
  ASSERT_EQ(run("simulate --seed 12 --n 50,50 --output " + p("c"), "FAIRBARY_SEED=11"), 0);
  EXPECT_EQ(slurp(p("a/data.csv")), slurp(p("b/data.csv")));
  EXPECT_NE(slurp(p("a/data.csv")), slurp(p("c/data.csv")));
}

TEST_F(Cli, FitIsDeterministicAndPipelineRuns) {
  simulate();
  const std::string fit = "fit --seed 4 --omega 0,2 --input " + p("sim/data.csv");
  ASSERT_EQ(run(fit + " --output " + p("m1")), 0);
  ASSERT_EQ(run(fit + " --output " + p("m2")), 0);
  EXPECT_EQ(slurp(p("m1/maps.json")), slurp(p("m2/maps.json")));
  for (const char* f : {"manifest.json", "fit_report.json", "split.json", "base_data.csv",
                        "resolved_config.json", "trace.csv"}) {
    EXPECT_TRUE(fs::exists(p("m1/") + f)) << f;
  }

  ASSERT_EQ(run("transform --bundle " + p("m1") + " --input " + p("sim/data.csv") + " --output " +
                p("pred.csv")),
            0);
  const auto pred = lines(p("pred.csv"));
  ASSERT_EQ(pred.size(), 801u);
  EXPECT_EQ(pred[0], "row_id,group,base_prediction,fair_prediction");
  EXPECT_EQ(pred[1].substr(0, 2), "0,");
  EXPECT_TRUE(fs::exists(p("pred.csv.config.json")));

  ASSERT_EQ(run("evaluate --bundle " + p("m1") + " --input " + p("sim/data.csv") + " --truth " +
                p("sim/truth.json") + " --output " + p("metrics.csv")),
            0);
  const auto metrics = slurp(p("metrics.csv"));
  for (const char* key : {"mse_base", "mse_fair", "unfairness_upper_bound,fair",
                          "unfairness_upper_bound,base", "truth_error,all"}) {
    EXPECT_NE(metrics.find(key), std::string::npos) << key;
  }
  EXPECT_TRUE(fs::exists(p("metrics.csv.meta.json")));
}

TEST_F(Cli, IdentityMapsLeaveBasePredictionsUnchanged) {
  simulate();
  ASSERT_EQ(run("fit --seed 4 --omega 0,2 --input " + p("sim/data.csv") + " --output " + p("m")), 0);
  auto maps = Json::parse(slurp(p("m/maps.json")));
  const double lo = maps["grid"]["lo"], hi = maps["grid"]["hi"];
  const int level = maps["grid"]["level"];
  const std::size_t knots = (std::size_t{1} << level) + 1;
  for (auto& row : maps["inverse_values"]) {
    for (std::size_t k = 0; k < knots; ++k) {
      row[k] = k + 1 == knots ? hi : lo + (hi - lo) * static_cast<double>(k) / (knots - 1);
    }
  }
  spit(p("m/maps.json"), maps.dump(2));
  ASSERT_EQ(run("transform --bundle " + p("m") + " --input " + p("sim/data.csv") + " --output " +
                p("pred.csv")),
            0);
  const auto pred = lines(p("pred.csv"));
  for (std::size_t i = 1; i < pred.size(); ++i) {
    const auto a = pred[i].rfind(',');
    const auto b = pred[i].rfind(',', a - 1);
    EXPECT_DOUBLE_EQ(std::stod(pred[i].substr(b + 1, a - b - 1)), std::stod(pred[i].substr(a + 1)))
        << pred[i];
  }
}

TEST_F(Cli, ManifestRecordsPushforwardHashAndSplit) {
  simulate();
  ASSERT_EQ(run("fit --seed 4 --omega 0,2 --input " + p("sim/data.csv") + " --output " + p("m")), 0);
  const auto man = Json::parse(slurp(p("m/manifest.json")));
  const auto split = Json::parse(slurp(p("m/split.json")));
  EXPECT_EQ(man["pushforward_sha256"].get<std::string>().size(), 64u);
  EXPECT_EQ(split["map_rows"]["g0"].size() + split["map_rows"]["g1"].size(), 400u);
  EXPECT_EQ(man["seed"], 4);
  EXPECT_EQ(man["w2_convention"], "half");
}

TEST_F(Cli, ExitCodes) {
  simulate();
  const std::string omega = " --omega 0,2 --output " + p("m");
  // 2: a single group cannot be made fair.
  {
    const auto all = lines(p("sim/data.csv"));
    std::string one = all[0] + "\n";
    for (std::size_t i = 1; i < all.size(); ++i) {
      if (all[i].rfind("g0,", 0) == 0) one += all[i] + "\n";
    }
    spit(p("one.csv"), one);
    EXPECT_EQ(run("fit --input " + p("one.csv") + omega), 2);
  }
  // 2: unknown config keys and missing files.
  spit(p("bad.json"), R"({"seeed": 3})");
  EXPECT_EQ(run("fit --config " + p("bad.json") + " --input " + p("sim/data.csv") + omega), 2);
  EXPECT_EQ(run("fit --input " + p("nope.csv") + omega), 2);
  // 3: outcome outside omega.
  EXPECT_EQ(run("fit --input " + p("sim/data.csv") + " --omega 0,1 --output " + p("m")), 3);
  // 4: L <= 1 leaves no bi-Lipschitz map.
  EXPECT_EQ(run("fit --L 1 --input " + p("sim/data.csv") + omega), 4);
  ASSERT_EQ(run("fit --seed 4 --input " + p("sim/data.csv") + omega), 0);
  // 5: unknown group label at transform time.
  spit(p("new.csv"), "group,x1\ng0,0.5\nzz,0.7\n");
  EXPECT_EQ(run("transform --bundle " + p("m") + " --input " + p("new.csv") + " --output " +
                p("o.csv")),
            5);
  // 5: feature dimension mismatch.
  spit(p("wide.csv"), "group,x1,x2\ng0,0.5,1\n");
  EXPECT_EQ(run("transform --bundle " + p("m") + " --input " + p("wide.csv") + " --output " +
                p("o.csv")),
            5);
  // 6: truth sidecar that does not parse or does not match its scenario.
  spit(p("truth.json"), "{ not json");
  const std::string eval =
      "evaluate --bundle " + p("m") + " --input " + p("sim/data.csv") + " --output " + p("e.csv");
  EXPECT_EQ(run(eval + " --truth " + p("truth.json")), 6);
  auto truth = Json::parse(slurp(p("sim/truth.json")));
  truth["theta_star"][0]["values"][1] = truth["theta_star"][0]["values"][1].get<double>() + 0.01;
  spit(p("truth2.json"), truth.dump());
  EXPECT_EQ(run(eval + " --truth " + p("truth2.json")), 6);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(Cli, SweepSingleSizeHasNoFittedSlope) {
  spit(p("cfg.json"), R"({"sweep": {"n_values": [256], "replicates": 1, "oracle_level": 8},
                          "eval": {"fresh_size": 4096}})");
  ASSERT_EQ(run("sweep --seed 2 --config " + p("cfg.json") + " --output " + p("sw")), 0);
  const auto rates = lines(p("sw/rates.csv"));
  ASSERT_EQ(rates.size(), 2u);
  EXPECT_EQ(rates[0], "n,replicate,map_error,truth_error,unfairness_ub,seed");
  EXPECT_EQ(rates[1].substr(0, 6), "256,0,");
  const auto meta = Json::parse(slurp(p("sw/rates_meta.json")));
  EXPECT_TRUE(meta["fitted_slope"].is_null());
  EXPECT_NEAR(meta["theoretical_slope"].get<double>(), -2.0 / 3.0, 1e-12);
  EXPECT_TRUE(fs::exists(p("sw/plot.svg")));
}

TEST_F(Cli, SweepAboveFailureBudgetExitsSeven) {
  // Every cell fails: the truth maps of this scenario leave the L = 2 slope box.
  spit(p("cfg.json"), R"({"scenario": {"name": "gaussian", "gaussian": [[0, 0.5], [1, 2.5]],
                                       "omega": [-8, 10]},
                          "sweep": {"n_values": [64], "replicates": 2, "failure_budget": 0.1}})");
  EXPECT_EQ(run("sweep --seed 2 --config " + p("cfg.json") + " --output " + p("sw")), 7);
  const auto rates = lines(p("sw/rates.csv"));
  ASSERT_EQ(rates.size(), 3u);
  EXPECT_NE(rates[1].find("NA"), std::string::npos);
}
