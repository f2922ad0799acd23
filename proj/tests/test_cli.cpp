// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "filltts/cli.hpp"
#include "test_util.hpp"

namespace filltts {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "filltts");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Invocation inv;
  inv.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  inv.out = out.str();
  inv.err = err.str();
  return inv;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / ("filltts_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Cli, ValidateConfigReportsAlignmentOnOneLine) {
  const auto dir = scratch("align");
  std::ofstream(dir / "bad.conf") << "block_size = 12\n";
  const auto inv = invoke({"validate-config", "-c", (dir / "bad.conf").string()});
  EXPECT_EQ(inv.code, 2);
  EXPECT_TRUE(inv.out.empty());
  EXPECT_EQ(std::count(inv.err.begin(), inv.err.end(), '\n'), 1) << inv.err;
  EXPECT_NE(inv.err.find("block_size 12"), std::string::npos) << inv.err;
}

TEST(Cli, ValidateConfigPrintsHashAndBudget) {
  const auto inv = invoke({"validate-config"});
  EXPECT_EQ(inv.code, 0) << inv.err;
  EXPECT_NE(inv.out.find(RunConfigFile().hash()), std::string::npos);
  EXPECT_NE(inv.out.find(std::to_string(expected_oracle_calls(ScalingConfig{}))), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"validate-config", "-s", "no_such_key=1"}).code, 2);
  EXPECT_EQ(invoke({"ablate", "--axis", "temperature", "--values", "1"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, ExitCodeMapping) {
  EXPECT_EQ(cli::exit_code_for(ErrorKind::kAlignment), 2);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::kTransport), 3);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::kProtocol), 3);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::kIo), 1);
}

TEST(Cli, InitConfigParsesBack) {
  const auto inv = invoke({"init-config"});
  ASSERT_EQ(inv.code, 0);
  EXPECT_EQ(RunConfigFile::parse(inv.out).hash(), RunConfigFile().hash());
}

TEST(Cli, RunIsDeterministicAndWritesArtifacts) {
  const auto dir = scratch("run");
  const std::vector<std::string> args = {"run", "--seed", "7", "-o", dir.string(), "-s", "prompt_count=3",
                                         "-s", "num_samples=4", "-s", "record_trials=true"};
  const auto first = invoke(args);
  ASSERT_EQ(first.code, 0) << first.err;
  const std::string report1 = read_file(dir / "run_report.json");
  const std::string rewards1 = read_file(dir / "run_rewards.csv");
  const auto second = invoke(args);
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_EQ(payload_text(read_file(dir / "run_report.json")), payload_text(report1));
  EXPECT_EQ(read_file(dir / "run_rewards.csv"), rewards1);

  auto cfg = RunConfigFile::parse("master_seed = 7\nprompt_count = 3\nnum_samples = 4\nrecord_trials = true\n");
  cfg.set("output_dir", dir.string());
  const std::string hash = cfg.hash();
  EXPECT_NE(report1.find("\"config_hash\": \"" + hash + "\""), std::string::npos);
  EXPECT_EQ(rewards1.find("\n" + hash + ","), rewards1.find('\n'));
  EXPECT_NE(read_file(dir / "run_trials.csv").find("\n" + hash + ","), std::string::npos);
  EXPECT_NE(first.out.find("fr-tts: 3 prompts"), std::string::npos) << first.out;
}

TEST(Cli, BestOfNWritesItsOwnReport) {
  const auto dir = scratch("bon");
  const auto inv = invoke({"bon", "-o", dir.string(), "-s", "prompt_count=2"});
  ASSERT_EQ(inv.code, 0) << inv.err;
  EXPECT_TRUE(fs::exists(dir / "bon_report.json"));
  EXPECT_TRUE(fs::exists(dir / "bon_rewards.csv"));
  EXPECT_FALSE(fs::exists(dir / "run_report.json"));
}

TEST(Cli, CorrelateAndAblateWriteTables) {
  const auto dir = scratch("tables");
  const auto corr = invoke({"correlate", "-o", dir.string(), "-s", "correlation_batch=12", "--no-rollout"});
  ASSERT_EQ(corr.code, 0) << corr.err;
  const std::string csv = read_file(dir / "correlation.csv");
  EXPECT_NE(csv.find("\"filling(K=8,Tc=10,Tr=0)\""), std::string::npos);
  EXPECT_EQ(csv.find("rollout"), std::string::npos);
  const auto abl = invoke({"ablate", "-o", dir.string(), "-s", "prompt_count=2", "-s", "num_samples=2",
                           "--axis", "block-size", "--values", "1,8,row"});
  ASSERT_EQ(abl.code, 0) << abl.err;
  const std::string table = read_file(dir / "ablation_block-size.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
  EXPECT_NE(table.find(",block-size,row,"), std::string::npos);
}

TEST(Cli, SampleThenScore) {
  const auto dir = scratch("sample");
  const std::string grid = (dir / "g.grid").string();
  const auto s = invoke({"sample", "--prompt", "2", "--rows", "6", "--grid", grid});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(load_grid(grid).frontier(), 6u * 16u);
  const auto sc = invoke({"score", "--prompt", "2", "--grid", grid});
  ASSERT_EQ(sc.code, 0) << sc.err;
  for (const char* name : {"cropping", "zeropadding", "rollout", "filling"})
    EXPECT_NE(sc.out.find(std::string("  ") + name), std::string::npos) << sc.out;
  EXPECT_EQ(sc.out.find("n/a"), std::string::npos) << sc.out;
  // 6 rows of 16 tokens do not align with 64-token blocks.
  const auto misaligned = invoke({"score", "--prompt", "2", "--grid", grid, "-s", "block_size=64"});
  ASSERT_EQ(misaligned.code, 0) << misaligned.err;
  EXPECT_NE(misaligned.out.find("n/a"), std::string::npos) << misaligned.out;
}

TEST(Cli, FixtureFromTheRepositoryScores) {
  const auto inv = invoke({"score", "--prompt", "0", "--grid", std::string(FILLTTS_FIXTURE_DIR) + "/stripes_half.grid"});
  EXPECT_EQ(inv.code, 0) << inv.err;
  EXPECT_EQ(invoke({"score", "--prompt", "1", "--grid", std::string(FILLTTS_FIXTURE_DIR) + "/stripes_half.grid"}).code,
            0);
}

TEST(Cli, UnreachableRemoteOracleExitsWithThree) {
  const auto dir = scratch("remote");
  const auto inv = invoke({"run", "-o", dir.string(), "-s", "oracle=remote", "-s",
                           "remote_endpoint=http://127.0.0.1:9", "-s", "remote_retries=0", "-s",
                           "remote_timeout_ms=200", "-s", "prompt_count=1"});
  EXPECT_EQ(inv.code, 3) << inv.err;
  EXPECT_EQ(std::count(inv.err.begin(), inv.err.end(), '\n'), 1) << inv.err;
}

}  // namespace
}  // namespace filltts
