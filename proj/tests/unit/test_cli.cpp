#include <gtest/gtest.h>

#include "goalseq/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace goalseq {
namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "goalseq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

class CliWorkspace : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("goalseq_cli_" + std::string(
        ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::filesystem::path dir_;
};

TEST(Cli, VerifyTheoryReportsResidual) {
  const auto r = run({"verify-theory", "--pairs", "20", "--seed", "3"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("max identity residual"), std::string::npos);
  EXPECT_NE(r.out.find("identity holds"), std::string::npos);
  EXPECT_NE(r.out.find("pairs 60"), std::string::npos);
}

TEST(Cli, MissingConfigNamesPath) {
  const auto r = run({"verify-theory", "--config", "/nonexistent/run.cfg"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/nonexistent/run.cfg"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"verify-theory", "--bogus"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"synth-data", "--kind", "audio", "--out", "/tmp/x"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, VerifyTheoryUsesConfigSeed) {
  const auto cfg = std::filesystem::temp_directory_path() / "goalseq_cli_seed.cfg";
  std::ofstream(cfg) << "seed = 9\n";
  const auto a = run({"verify-theory", "--pairs", "5", "--config", cfg.string()});
  const auto b = run({"verify-theory", "--pairs", "5", "--seed", "9"});
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  std::filesystem::remove(cfg);
}

TEST_F(CliWorkspace, TextPipeline) {
  ASSERT_EQ(run({"synth-data", "--kind", "text", "--out", path("text"), "--count", "150", "--test-count", "40"}).code, 0);
  const std::string train = path("text/train.txt"), test = path("text/test.txt");
  ASSERT_TRUE(std::filesystem::exists(train));

  auto r = run({"pretrain", "--data", train, "--out", path("pre.ckpt"), "--epochs", "2", "--hidden", "8",
                "--embed", "8", "--batch", "16"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines_of(r.out).size(), 3u);

  r = run({"train", "--checkpoint", path("pre.ckpt"), "--data", train, "--out", path("adv.ckpt"), "--steps", "2",
           "--batch", "4", "--reward-refs", "30", "--disc-hidden", "8", "--metrics", path("m.jsonl"),
           "--manifest", path("manifest.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream metrics(path("m.jsonl"));
  int rows = 0;
  for (std::string l; std::getline(metrics, l); ++rows) EXPECT_NO_THROW((void)nlohmann::json::parse(l));
  EXPECT_EQ(rows, 2);
  EXPECT_TRUE(std::filesystem::exists(path("manifest.json")));

  r = run({"generate", "--checkpoint", path("adv.ckpt"), "--count", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines_of(r.out).size(), 10u);
  EXPECT_EQ(run({"generate", "--checkpoint", path("adv.ckpt"), "--count", "10"}).out, r.out);

  r = run({"evaluate", "--checkpoint", path("adv.ckpt"), "--data", test, "--count", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GT(j.at("nll_gen").get<double>(), 0.0);
  EXPECT_TRUE(j.contains("bleu5"));

  r = run({"score", "--kind", "bleu", "--candidates", test, "--references", test, "--n", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mean_bleu2_percent 100"), std::string::npos);
}

TEST_F(CliWorkspace, TrajectoryPipeline) {
  ASSERT_EQ(run({"synth-data", "--kind", "trajectory", "--out", path("traj.csv"), "--count", "12"}).code, 0);
  auto r = run({"score", "--kind", "mcgrew", "--data", path("traj.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines_of(r.out).size(), 13u);

  r = run({"pretrain", "--mode", "real", "--data", path("traj.csv"), "--out", path("pre.ckpt"), "--epochs", "1",
           "--hidden", "8", "--batch", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"train", "--checkpoint", path("pre.ckpt"), "--data", path("traj.csv"), "--out", path("adv.ckpt"),
           "--steps", "1", "--batch", "4", "--disc-hidden", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"generate", "--checkpoint", path("adv.ckpt"), "--count", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines_of(r.out).size(), 1u + 2u * 40u);
  r = run({"evaluate", "--checkpoint", path("adv.ckpt"), "--count", "5", "--data", path("traj.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GE(j.at("mcgrew").get<double>(), 0.0);
  EXPECT_TRUE(j.contains("nll_gen"));
}

TEST_F(CliWorkspace, BadInputsExitWithValidationCode) {
  EXPECT_EQ(run({"generate", "--checkpoint", path("missing.ckpt")}).code, 1);
  std::ofstream(path("bad.csv")) << "a,b\n1,2\n";
  EXPECT_EQ(run({"score", "--kind", "mcgrew", "--data", path("bad.csv")}).code, 1);
  std::ofstream(path("empty.txt")).close();
  EXPECT_EQ(run({"pretrain", "--data", path("empty.txt"), "--out", path("x.ckpt")}).code, 1);
}

}  // namespace
}  // namespace goalseq
