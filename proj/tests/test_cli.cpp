#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fbl/dataset.hpp"
#include "fbl/sampler.hpp"

using namespace fbl;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() / ("fbl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(FBL_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

const std::string kQuick = " --iters 300 --burn-in 100 --chains 2";

}  // namespace

TEST_F(Cli, GenerateCaseI) {
  ASSERT_EQ(run("generate --preset case1 --seed 42 -o " + path("g")), 0);
  const auto d = load_csv(path("g/data.csv"));
  EXPECT_EQ(d.size(), 15u);
  const auto truth = read_json(dir / "g/truth.json");
  EXPECT_EQ(truth["seed"], 42);
  EXPECT_EQ(truth["phi"].size(), 9u);
}

TEST_F(Cli, GenerateUnknownPresetIsUsageError) {
  EXPECT_EQ(run("generate --preset case9 -o " + path("g")), 1);
  EXPECT_NE(slurp(dir / "stderr.txt").find("case1"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "g/data.csv"));
}

TEST_F(Cli, GenerateIsByteIdentical) {
  ASSERT_EQ(run("generate --preset case3a --seed 7 -o " + path("a")), 0);
  ASSERT_EQ(run("generate --preset case3a --seed 7 -o " + path("b")), 0);
  EXPECT_EQ(slurp(dir / "a/data.csv"), slurp(dir / "b/data.csv"));
  EXPECT_EQ(slurp(dir / "a/truth.json"), slurp(dir / "b/truth.json"));
}

TEST_F(Cli, GenerateOverrides) {
  ASSERT_EQ(run("generate --preset case2 --n 12 --noise 0.5 -o " + path("g")), 0);
  EXPECT_EQ(load_csv(path("g/data.csv")).size(), 12u);
  EXPECT_EQ(read_json(dir / "g/truth.json")["noise_sd"], 0.5);
}

TEST_F(Cli, FitParameterCounts) {
  ASSERT_EQ(run("fit --preset case1" + kQuick + " -o " + path("c1")), 0);
  EXPECT_EQ(read_json(dir / "c1/summary.json")["n_parameters"], 9);
  ASSERT_EQ(run("fit --preset case4" + kQuick + " -o " + path("c4")), 0);
  const auto s4 = read_json(dir / "c4/summary.json");
  EXPECT_EQ(s4["n_parameters"], 14);
  EXPECT_TRUE(s4["parameters"][13].contains("inclusion_frequency"));
  ASSERT_EQ(run("fit --preset case3b" + kQuick + " -o " + path("c3")), 0);
  bool sigma = false;
  const auto s3 = read_json(dir / "c3/summary.json");
  for (const auto& p : s3["parameters"]) sigma |= p["name"] == "sigma";
  EXPECT_TRUE(sigma);
  const auto cs = read_chains(path("c1"));
  EXPECT_EQ(cs.n_chains(), 2u);
  EXPECT_EQ(cs.n_iterations(), 300u);
}

TEST_F(Cli, FitIsByteIdentical) {
  ASSERT_EQ(run("fit --preset case1 --seed 5" + kQuick + " -o " + path("a")), 0);
  ASSERT_EQ(run("fit --preset case1 --seed 5" + kQuick + " -o " + path("b")), 0);
  for (const auto* f : {"chain_1.csv", "chain_2.csv", "summary.json", "manifest.json"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
}

TEST_F(Cli, FitFlagsExtendModel) {
  ASSERT_EQ(run("fit --preset case1 --select-rules --estimate-sigma" + kQuick + " -o " + path("f")), 0);
  EXPECT_EQ(read_json(dir / "f/summary.json")["n_parameters"], 13);  // 9 + sigma + 3 flags
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  std::ofstream(dir / "exp.json") << R"({"preset": "case1", "seed": 3,
    "sampler": {"iterations": 250, "burn_in": 50, "chains": 2, "init": "prior"}})";
  ASSERT_EQ(run("fit --config " + path("exp.json") + " -o " + path("a")), 0);
  auto cs = read_chains(path("a"));
  EXPECT_EQ(cs.n_iterations(), 250u);
  EXPECT_EQ(cs.seed, 3u);
  ASSERT_EQ(run("fit --config " + path("exp.json") + " --iters 150 --seed 4 -o " + path("b")), 0);
  cs = read_chains(path("b"));
  EXPECT_EQ(cs.n_iterations(), 150u);
  EXPECT_EQ(cs.seed, 4u);
  EXPECT_EQ(cs.config.init, InitMethod::Prior);
}

TEST_F(Cli, FitFromDataAndRuleBase) {
  ASSERT_EQ(run("generate --preset case1 -o " + path("g")), 0);
  ASSERT_EQ(run("fit --preset case1" + kQuick + " -o " + path("ref")), 0);
  const auto rb = read_json(dir / "ref/model.json")["rule_base"];
  std::ofstream(dir / "rb.json") << rb.dump(2);
  ASSERT_EQ(run("fit --data " + path("g/data.csv") + " --rule-base " + path("rb.json") + kQuick + " -o " + path("f")), 0);
  EXPECT_EQ(read_json(dir / "f/summary.json")["n_parameters"], 9);
}

TEST_F(Cli, FitBadConfigIsRuntimeFailure) {
  std::ofstream(dir / "bad.json") << R"({"preset": "case1", "sampler": {"iterations": 10, "burn_in": 20}})";
  EXPECT_EQ(run("fit --config " + path("bad.json") + " -o " + path("f")), 2);
  EXPECT_TRUE(fs::exists(dir / "f/.failed"));
  EXPECT_FALSE(fs::exists(dir / "f/summary.json"));
  EXPECT_EQ(run("fit --preset case1" + kQuick + " -o " + path("f")), 0);
  EXPECT_FALSE(fs::exists(dir / "f/.failed"));
}

TEST_F(Cli, FitWithoutModelSourceIsUsageError) { EXPECT_EQ(run("fit" + kQuick + " -o " + path("f")), 1); }

TEST_F(Cli, Predict) {
  ASSERT_EQ(run("fit --preset case3a" + kQuick + " -o " + path("fit")), 0);
  std::ofstream(dir / "in.csv") << "loc_risk,maintenance\n1.1,8.8\n7.7,1.1\n";
  ASSERT_EQ(run("predict --fit " + path("fit") + " --inputs " + path("in.csv") + " -o " + path("p")), 0);
  const auto draws = read_csv_table(path("p/predictive_draws.csv"));
  ASSERT_EQ(draws.values.cols, 2u);
  EXPECT_EQ(draws.values.rows, 2u * 200u);
  const auto points = read_csv_table(path("p/predictions.csv"));
  ASSERT_EQ(points.values.rows, 2u);
  const auto mean_col = static_cast<std::size_t>(
      std::find(points.header.begin(), points.header.end(), "mean") - points.header.begin());
  ASSERT_LT(mean_col, points.header.size());
  for (std::size_t k = 0; k < 2; ++k) {
    const auto col = draws.values.column(k);
    double m = 0.0;
    for (double v : col) m += v;
    m /= static_cast<double>(col.size());
    // predictions.csv holds printed values; allow for the formatting round trip.
    EXPECT_NEAR(points.values(k, mean_col), m, 1e-9 * std::max(1.0, std::abs(m)));
  }
}

TEST_F(Cli, PredictEmptyInputsFails) {
  ASSERT_EQ(run("fit --preset case1" + kQuick + " -o " + path("fit")), 0);
  std::ofstream(dir / "empty.csv") << "";
  EXPECT_NE(run("predict --fit " + path("fit") + " --inputs " + path("empty.csv") + " -o " + path("p")), 0);
  std::ofstream(dir / "header.csv") << "loc_risk,maintenance\n";
  EXPECT_NE(run("predict --fit " + path("fit") + " --inputs " + path("header.csv") + " -o " + path("p")), 0);
}

TEST_F(Cli, CompareGlm) {
  ASSERT_EQ(run("compare-glm --preset case2 --iters 600 --burn-in 200 -o " + path("all")), 0);
  const auto all = read_json(dir / "all/mse.json")["rows"];
  ASSERT_EQ(all.size(), 4u);
  double best = 1e300;
  std::string best_name;
  for (const auto& r : all) {
    if (r["mse"].get<double>() < best) {
      best = r["mse"];
      best_name = r["model"];
    }
  }
  EXPECT_EQ(best_name, "GLM4");

  ASSERT_EQ(run("compare-glm --preset case2 --glm GLM2 --iters 600 --burn-in 200 -o " + path("one")), 0);
  EXPECT_EQ(read_json(dir / "one/mse.json")["rows"].size(), 1u);

  ASSERT_EQ(run("fit --preset case2" + kQuick + " -o " + path("fit")), 0);
  ASSERT_EQ(run("compare-glm --preset case2 --glm GLM1 --fbl-fit " + path("fit") + " --iters 600 --burn-in 200 -o " +
                path("fbl")),
            0);
  const auto rows = read_json(dir / "fbl/mse.json")["rows"];
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1]["model"], "FBL");
}

TEST_F(Cli, Diagnose) {
  ASSERT_EQ(run("fit --preset case1" + kQuick + " -o " + path("fit")), 0);
  ASSERT_EQ(run("diagnose --fit " + path("fit") + " --max-lag 20 -o " + path("d")), 0);
  std::size_t bundles = 0;
  for (const auto& e : fs::directory_iterator(dir / "d")) {
    if (!e.is_directory()) continue;
    ++bundles;
    for (const auto* f : {"trace.csv", "density.csv", "autocorrelation.csv", "geweke.csv"}) {
      EXPECT_TRUE(fs::exists(e.path() / f)) << e.path() << f;
    }
    const auto acf = read_csv_table((e.path() / "autocorrelation.csv").string());
    ASSERT_EQ(acf.values.rows, 21u);
    for (std::size_t c = 1; c < acf.values.cols; ++c) EXPECT_EQ(acf.values(0, c), 1.0);
  }
  EXPECT_EQ(bundles, 9u);
}

TEST_F(Cli, DiagnoseMissingFitFails) {
  EXPECT_NE(run("diagnose --fit " + path("nowhere") + " -o " + path("d")), 0);
}

TEST_F(Cli, Bench) {
  ASSERT_EQ(run("bench --params 9,12 --rules 3 --iters 50 --repeats 1 -o " + path("b")), 0);
  std::istringstream lines(slurp(dir / "b/timing.csv"));
  std::vector<std::string> rows;
  for (std::string l; std::getline(lines, l);) rows.push_back(l);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "varied,parameters,rules,seconds");
  EXPECT_EQ(rows[1].rfind("parameters,9,3,", 0), 0u);
  EXPECT_EQ(rows[3].rfind("rules,9,3,", 0), 0u);
}

TEST_F(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(run(""), 1); }
