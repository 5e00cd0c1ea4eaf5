#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "dpu/cli.hpp"
#include "dpu/data.hpp"
#include "dpu/model.hpp"

namespace dpu {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"dpu"};
  storage.insert(storage.end(), args);
  std::vector<const char*> argv;
  for (const auto& a : storage) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dpu_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const std::string kConfig = std::string(DPU_SOURCE_DIR) + "/configs/simulation.cfg";

TEST_F(CliTest, HelpAndVersion) {
  EXPECT_EQ(run({"--help"}).code, 0);
  const auto v = run({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find("0.1.0"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitWithOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"simulate"}).code, 1);
  EXPECT_EQ(run({"train", "--epochs"}).code, 1);
}

TEST_F(CliTest, MissingLoyalFileIsADataError) {
  ASSERT_EQ(run({"simulate", "-c", kConfig, "-o", path("all.csv")}).code, 0);
  ASSERT_EQ(run({"split", "-c", kConfig, "-i", path("all.csv"), "-o", path("split")}).code, 0);
  const std::string missing = path("nope/positive_loyal.csv");
  const auto r = run({"train", "-c", kConfig, "--positive", path("split/positive_interest.csv"),
                      "--unlabeled", path("split/unlabeled.csv"), "--loyal", missing, "-m",
                      path("model.txt")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST_F(CliTest, InvalidPriorsAndConfigKeysAreDataErrors) {
  ASSERT_EQ(run({"simulate", "-o", path("all.csv")}).code, 0);
  ASSERT_EQ(run({"split", "-i", path("all.csv"), "-o", path("split")}).code, 0);
  auto r = run({"train", "--data-dir", path("split"), "--beta", "0.3", "--gamma", "0.4", "-m",
                path("m.txt")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("gamma"), std::string::npos);
  r = run({"train", "--data-dir", path("split"), "-m", path("m.txt")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("priors"), std::string::npos);
  std::ofstream(path("bad.cfg")) << "train.epoch = 5\n";
  r = run({"simulate", "-c", path("bad.cfg"), "-o", path("x.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("train.epoch"), std::string::npos);
}

TEST_F(CliTest, DivergenceIsANumericalError) {
  ASSERT_EQ(run({"simulate", "-o", path("all.csv")}).code, 0);
  ASSERT_EQ(run({"split", "-i", path("all.csv"), "-o", path("split")}).code, 0);
  const auto r = run({"train", "-c", path("split/priors.cfg"), "--data-dir", path("split"),
                      "--loss", "squared", "--learning-rate", "1e200", "--epochs", "20", "-m",
                      path("m.txt")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("epoch"), std::string::npos) << r.err;
}

TEST_F(CliTest, SimulateIsByteIdenticalAcrossRuns) {
  ASSERT_EQ(run({"simulate", "-c", kConfig, "-o", path("a.csv"), "--test-out", path("t.csv")}).code,
            0);
  const auto first = slurp(path("a.csv"));
  const auto first_test = slurp(path("t.csv"));
  ASSERT_EQ(run({"simulate", "-c", kConfig, "-o", path("a.csv"), "--test-out", path("t.csv")}).code,
            0);
  EXPECT_EQ(slurp(path("a.csv")), first);
  EXPECT_EQ(slurp(path("t.csv")), first_test);
  EXPECT_NE(first, first_test);
  EXPECT_EQ(first.rfind("# dpu 0.1.0 | command: ", 0), 0u);
  EXPECT_NE(first.find("| seed: 1\n"), std::string::npos);
}

TEST_F(CliTest, FullPipelineWithShippedConfig) {
  ASSERT_EQ(run({"simulate", "-c", kConfig, "-o", path("all.csv"), "--test-out", path("test.csv")})
                .code,
            0);
  const auto s = run({"split", "-c", kConfig, "-i", path("all.csv"), "-o", path("split")});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_NE(s.out.find("J = 1050, K = 2500"), std::string::npos) << s.out;
  const auto t = run({"train", "-c", kConfig, "--data-dir", path("split"), "-m", path("model.txt"),
                      "--trace-out", path("trace.txt"), "--epochs", "50"});
  ASSERT_EQ(t.code, 0) << t.err;
  std::istringstream trace(slurp(path("trace.txt")));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(trace, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::size_t epoch;
    double risk, norm;
    ASSERT_TRUE(fields >> epoch >> risk >> norm) << line;
    EXPECT_EQ(epoch, ++lines);
  }
  EXPECT_EQ(lines, 50u);

  const auto e = run({"evaluate", "-c", kConfig, "-m", path("model.txt"), "-t", path("test.csv"),
                      "--data-dir", path("split"), "--rows-out", path("rows.csv"), "--roc-out",
                      path("roc.txt")});
  ASSERT_EQ(e.code, 0) << e.err;
  for (const char* field : {"auc = ", "t1 = ", "t2 = ", "t3 = ", "t4 = ", "t5 = ", "total = ",
                            "risk = ", "cost_weighted_error = "}) {
    EXPECT_NE(e.out.find(field), std::string::npos) << field;
  }
  const auto rows = slurp(path("rows.csv"));
  EXPECT_NE(rows.find("field,value\n"), std::string::npos);
  EXPECT_NE(rows.find("\nt5,"), std::string::npos);
  EXPECT_FALSE(slurp(path("roc.txt")).empty());

  const auto p = run({"predict", "-m", path("model.txt"), "-i", path("test.csv"), "-o",
                      path("pred.csv")});
  ASSERT_EQ(p.code, 0) << p.err;
  const auto pred = slurp(path("pred.csv"));
  EXPECT_NE(pred.find("score,posterior,label\n"), std::string::npos);
  EXPECT_EQ(std::count(pred.begin(), pred.end(), '\n'), 2 + 2500);
}

TEST_F(CliTest, ThreeWaySplitWritesTestSet) {
  ASSERT_EQ(run({"simulate", "-o", path("all.csv")}).code, 0);
  const auto r = run({"split", "--protocol", "three_way", "-i", path("all.csv"), "-o",
                      path("split")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("split/held_out.csv")));
  EXPECT_EQ(load_csv(path("split/held_out.csv"), CsvSchema::FullyLabeled).features.rows(), 500u);
}

TEST_F(CliTest, BiasCheckReportsZScore) {
  const auto r = run({"bias-check", "--seed", "3", "--resamples", "40", "--oracle-size", "100000"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* field : {"loss = zero_one", "resamples = 40", "mean = ", "se = ", "oracle = ",
                            "z = "}) {
    EXPECT_NE(r.out.find(field), std::string::npos) << field;
  }
  EXPECT_EQ(run({"bias-check", "--resamples", "1"}).code, 2);
}

}  // namespace
}  // namespace dpu
