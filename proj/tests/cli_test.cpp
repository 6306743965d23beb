#include "flowbench/cli/cli.hpp"
#include "flowbench/data/dataset.hpp"
#include "flowbench/data/io.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <map>
#include <filesystem>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = flowbench::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    unsetenv("FLOWBENCH_SEED");
    dir_ = fs::temp_directory_path() / ("flowbench_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small separable dataset: 4 features, 200 normals then 100 anomalies.
  std::string gaussian_csv() {
    const Outcome r = cli({"synth", "--type", "gaussian", "--dims", "4", "--mu-q", "3", "--n-train", "10",
                       "--n-test", "100", "--seed", "5", "--out", path("g")});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto test = flowbench::load_csv(path("g/test.csv"));
    // Extra normals so the Zong split has something to train on.
    flowbench::Matrix x(test.rows() + 100, 4);
    std::vector<int> y;
    std::mt19937_64 g(1);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 100; ++i) {
      for (int j = 0; j < 4; ++j) x(i, j) = n01(g);
      y.push_back(0);
    }
    x.bottomRows(test.rows()) = test.features;
    y.insert(y.end(), test.labels.begin(), test.labels.end());
    flowbench::write_file_atomic(path("data.csv"), flowbench::to_csv(x, test.feature_names, &y));
    return path("data.csv");
  }

  static json preamble(const std::string& file) {
    const std::string text = flowbench::read_text_file(file);
    EXPECT_EQ(text.rfind("# {", 0), 0u);
    return json::parse(text.substr(2, text.find('\n') - 2));
  }

  fs::path dir_;
};

// Lines after the provenance preamble and the header.
long data_lines(const std::string& file) {
  std::istringstream in(flowbench::read_text_file(file));
  long n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty() && line[0] != '#';
  return n - 1;
}

const std::vector<std::string> kTiny{"--epochs", "8", "--coupling", "2", "--hidden", "16", "--batch", "64"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_F(CliTest, UnknownSubcommandIsUsageError) {
  const Outcome r = cli({"frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("frobnicate"), std::string::npos);
}

TEST_F(CliTest, NoSubcommandIsUsageError) { EXPECT_EQ(cli({}).code, 2); }

TEST_F(CliTest, UnknownFlagPrintsUsage) {
  const Outcome r = cli({"eval", "--bogus", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, HelpExitsZero) {
  const Outcome r = cli({"train", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--coupling"), std::string::npos);
}

TEST_F(CliTest, BadEnumValueIsUsageError) {
  EXPECT_EQ(cli({"train", "--data", "x.csv", "--kind", "glow", "--out", path("m.json")}).code, 2);
}

TEST_F(CliTest, MissingOutIsUsageError) { EXPECT_EQ(cli({"eval", "--scores", "s.csv"}).code, 2); }

TEST_F(CliTest, TrainScoreEvalRoundTrip) {
  const std::string data = gaussian_csv();
  Outcome r = cli(cat({"train", "--data", data, "--kind", "nice", "--out", path("model.json")}, kTiny));
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(path("model.json")));
  const json bundle = json::parse(flowbench::read_text_file(path("model.json")));
  EXPECT_EQ(bundle.dump().find("\"command\":\"train\"") != std::string::npos, true);

  r = cli({"score", "--data", data, "--model", path("model.json"), "--out", path("scores.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(preamble(path("scores.csv"))["command"], "score");
  const auto scores = flowbench::load_csv(path("scores.csv"));
  EXPECT_EQ(scores.rows(), 300);
  EXPECT_EQ(scores.feature_names, (std::vector<std::string>{"row_index", "score"}));

  r = cli({"eval", "--scores", path("scores.csv"), "--out", path("report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(flowbench::read_text_file(path("report.json")));
  EXPECT_GT(rep["auroc"].get<double>(), 0.9);
  EXPECT_EQ(rep["n_normal"], 200);
  EXPECT_EQ(rep["n_anomaly"], 100);
  EXPECT_EQ(rep["provenance"]["artifact_version"], flowbench::kArtifactVersion);
}

TEST_F(CliTest, TypicalityScoringRuns) {
  const std::string data = gaussian_csv();
  ASSERT_EQ(cli(cat({"train", "--data", data, "--out", path("m.json")}, kTiny)).code, 0);
  const Outcome r = cli({"score", "--data", data, "--model", path("m.json"), "--test", "typicality", "--out",
                     path("s.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = flowbench::load_csv(path("s.csv"));
  EXPECT_GE(s.features.col(1).minCoeff(), 0.0);
}

TEST_F(CliTest, UnknownConfigKeyRejected) {
  flowbench::write_file_atomic(path("c.json"), R"({"scores": "s.csv", "colour": "blue"})");
  const Outcome r = cli({"eval", "--config", path("c.json"), "--out", path("r.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST_F(CliTest, ExplicitFlagsBeatConfig) {
  const std::string matrix = std::string(FLOWBENCH_FIXTURES) + "/adbench_tabular_auroc.csv";
  flowbench::write_file_atomic(path("c.json"), json{{"matrix", matrix}, {"beta", 0.5}, {"gamma", 0.3}}.dump());
  const Outcome r = cli({"counterintuitive", "--config", path("c.json"), "--gamma", "0.01", "--out", path("v.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json v = json::parse(flowbench::read_text_file(path("v.json")));
  EXPECT_DOUBLE_EQ(v["verdicts"][0]["gamma"].get<double>(), 0.01);
  EXPECT_DOUBLE_EQ(v["verdicts"][0]["beta"].get<double>(), 0.5);
  EXPECT_EQ(v["provenance"]["config"]["gamma"], "0.01");
}

TEST_F(CliTest, SeedPrecedence) {
  const std::string matrix = std::string(FLOWBENCH_FIXTURES) + "/adbench_tabular_auroc.csv";
  setenv("FLOWBENCH_SEED", "7", 1);
  ASSERT_EQ(cli({"eval", "--matrix", matrix, "--out", path("a.csv")}).code, 0);
  EXPECT_EQ(preamble(path("a.csv"))["master_seed"], 7);
  ASSERT_EQ(cli({"eval", "--matrix", matrix, "--seed", "9", "--out", path("b.csv")}).code, 0);
  EXPECT_EQ(preamble(path("b.csv"))["master_seed"], 9);
  setenv("FLOWBENCH_SEED", "seven", 1);
  EXPECT_EQ(cli({"eval", "--matrix", matrix, "--out", path("c.csv")}).code, 2);
  unsetenv("FLOWBENCH_SEED");
  ASSERT_EQ(cli({"eval", "--matrix", matrix, "--out", path("d.csv")}).code, 0);
  EXPECT_EQ(preamble(path("d.csv"))["master_seed"], 0);
}

TEST_F(CliTest, BenchmarkRerunIsByteIdentical) {
  const std::string data = gaussian_csv();
  const auto args = cat({"benchmark", "--data", data, "--trials", "2", "--seed", "11", "--out", path("bench")}, kTiny);
  ASSERT_EQ(cli(args).code, 0);
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator(path("bench"))) first[e.path().filename()] = flowbench::read_text_file(e.path());
  ASSERT_EQ(cli(args).code, 0);
  for (const auto& [name, text] : first) EXPECT_EQ(flowbench::read_text_file(dir_ / "bench" / name), text) << name;
  EXPECT_EQ(first.size(), 2u);  // trials.csv and summary.csv only, no leftover temp files
}

TEST_F(CliTest, BenchmarkParallelMatchesSerial) {
  const std::string data = gaussian_csv();
  ASSERT_EQ(cli(cat({"benchmark", "--data", data, "--trials", "3", "--out", path("a")}, kTiny)).code, 0);
  ASSERT_EQ(cli(cat({"benchmark", "--data", data, "--trials", "3", "--jobs", "3", "--out", path("b")}, kTiny)).code,
            0);
  auto body = [](const fs::path& p) {
    const std::string t = flowbench::read_text_file(p);
    return t.substr(t.find('\n') + 1);
  };
  EXPECT_EQ(body(path("a/trials.csv")), body(path("b/trials.csv")));
  EXPECT_EQ(body(path("a/summary.csv")), body(path("b/summary.csv")));
}

TEST_F(CliTest, BenchmarkWithMatrixWritesRanksAndVerdicts) {
  const std::string data = gaussian_csv();
  fs::copy_file(data, path("breastw.csv"));
  const std::string fx = FLOWBENCH_FIXTURES;
  const Outcome r = cli(cat({"benchmark", "--data", path("breastw.csv"), "--trials", "2", "--matrix",
                         fx + "/adbench_tabular_auroc.csv", "--meta", fx + "/adbench_models.csv", "--out",
                         path("bench")},
                        kTiny));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GT(data_lines(path("bench/ranks.csv")), 1);
  const json v = json::parse(flowbench::read_text_file(path("bench/counterintuitive.json")));
  ASSERT_EQ(v["datasets"].size(), 1u);
  EXPECT_EQ(v["datasets"][0]["dataset"], "breastw");
}

TEST_F(CliTest, MissingDatasetNamesPath) {
  const Outcome r = cli({"benchmark", "--data", path("nowhere.csv"), "--out", path("bench")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("nowhere.csv"), std::string::npos);
}

TEST_F(CliTest, DomainErrorExitsOne) {
  flowbench::write_file_atomic(path("s.csv"), "row_index,score,label\n0,1.0,0\n1,2.0,0\n");
  EXPECT_EQ(cli({"eval", "--scores", path("s.csv"), "--out", path("r.json")}).code, 1);
}

TEST_F(CliTest, CounterintuitiveSweepOnFixtures) {
  const std::string fx = FLOWBENCH_FIXTURES;
  const Outcome r = cli({"counterintuitive", "--matrix", fx + "/adbench_tabular_auroc.csv", "--meta",
                     fx + "/adbench_models.csv", "--sweep", "--out", path("v.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json v = json::parse(flowbench::read_text_file(path("v.json")));
  EXPECT_EQ(v["summary"]["counterintuitive_cells"], 0);
  EXPECT_GT(v["summary"]["total_cells"].get<int>(), 0);
  EXPECT_EQ(v["provenance"]["config"]["sweep"], true);
}

TEST_F(CliTest, CounterintuitiveNeedsGridOrPoint) {
  const std::string fx = FLOWBENCH_FIXTURES;
  EXPECT_EQ(cli({"counterintuitive", "--matrix", fx + "/adbench_tabular_auroc.csv", "--out", path("v.json")}).code, 2);
}

TEST_F(CliTest, IdOnSyntheticAr) {
  const Outcome r = cli({"id", "--rho", "0,0.9", "--dims", "6", "--rows", "800", "--method", "twonn,mle", "--k", "10",
                     "--ratios", "1,0.5", "--out", path("id.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data_lines(path("id.csv")), 2 * 2 * 2);  // rho x method x ratio
}

TEST_F(CliTest, SynthAnomalyTypesFromSeedRows) {
  const std::string data = gaussian_csv();
  for (const std::string type : {"local", "global", "dependency", "clustered"}) {
    const Outcome r = cli({"synth", "--type", type, "--data", data, "--n-normal", "150", "--n-anomaly", "15",
                       "--components", "2", "--out", path(type + ".csv")});
    ASSERT_EQ(r.code, 0) << type << ": " << r.err;
    const auto d = flowbench::load_csv(path(type + ".csv"));
    EXPECT_EQ(d.rows(), 165) << type;
    EXPECT_EQ(d.count(1), 15) << type;
    EXPECT_TRUE(fs::exists(path(type + ".csv.provenance.json")));
  }
}

TEST_F(CliTest, VerifyWritesEveryReport) {
  const Outcome r = cli({"verify", "--dims", "4,8", "--gap-dims", "2", "--samples", "2000", "--epochs", "2", "--n-train",
                     "200", "--n-test", "100", "--hidden", "16", "--out", path("v")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"gap.json", "concentration.csv", "norm_variance.csv", "sweep.csv", "histograms.csv"})
    EXPECT_TRUE(fs::exists(dir_ / "v" / f)) << f;
  EXPECT_EQ(data_lines(path("v/sweep.csv")), 2);
  const json gap = json::parse(flowbench::read_text_file(path("v/gap.json")));
  EXPECT_NEAR(gap["reports"][0]["gap"].get<double>(), gap["reports"][0]["analytic_gap"].get<double>(),
              5 * gap["reports"][0]["gap_se"].get<double>());
}

TEST_F(CliTest, VerifyRejectsUnknownCheck) {
  EXPECT_EQ(cli({"verify", "--checks", "gap,vibes", "--out", path("v")}).code, 2);
}
