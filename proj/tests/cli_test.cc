// Copyright 2026 The tumatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include "json.hpp"

namespace tumatch {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult Cli(const std::string& args) {
  std::string cmd = std::string(TUMATCH_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("tumatch_cli_" + std::string(
                ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string P(const std::string& name) const { return (dir_ / name).string(); }

  // simulate -> train -> solve -> recommend into `sub`, returns its path.
  fs::path Pipeline(const std::string& sub, int threads) {
    fs::path d = dir_ / sub;
    fs::create_directories(d);
    std::string g = "--seed 4 --threads " + std::to_string(threads) + " ";
    std::string ds = d.string();
    EXPECT_EQ(Cli(g + "simulate --nx 60 --ny 50 --skew 1 --events 15 --out-dir " + ds).code, 0);
    EXPECT_EQ(Cli(g + "train --feedback " + ds + "/feedback.csv --roster " + ds +
                  "/roster.csv --epochs 5 --out-dir " + ds)
                  .code,
              0);
    std::string models = " --roster " + ds + "/roster.csv --model-xy " + ds +
                         "/model_xy.bin --model-yx " + ds + "/model_yx.bin";
    EXPECT_EQ(Cli(g + "solve" + models + " --out-dir " + ds).code, 0);
    EXPECT_EQ(Cli(g + "recommend" + models + " --equilibrium " + ds +
                  "/equilibrium.bin --k 5 --out-csv " + ds + "/recs.csv")
                  .code,
              0);
    EXPECT_EQ(Cli(g + "recommend" + models + " --mode fusion --fusion harmonic --k 5 --out-csv " +
                  ds + "/fused.csv")
                  .code,
              0);
    return d;
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(Cli("").code, 1);
  EXPECT_EQ(Cli("nosuchcommand").code, 1);
  EXPECT_EQ(Cli("solve --roster a.csv").code, 1);
  EXPECT_EQ(Cli("simulate --nx abc --out-dir " + P("x")).code, 1);
  EXPECT_EQ(Cli("verify --random 3x").code, 1);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  EXPECT_EQ(Cli("ingest --feedback " + P("missing.csv")).code, 2);
  std::ofstream(P("bad.csv")) << "sender,receiver,action,timestamp\na,b,super-like,1\n";
  std::ofstream(P("roster.csv")) << "user_id,side\na,X\nb,Y\n";
  EXPECT_EQ(Cli("ingest --feedback " + P("bad.csv") + " --roster " + P("roster.csv")).code, 2);
}

TEST_F(CliTest, IngestSummarizes) {
  std::ofstream(P("fb.csv")) << "sender,receiver,action,timestamp\n"
                                "a,b,like,1\nb,a,thank,2\nc,b,nope,3\n";
  std::ofstream(P("roster.csv")) << "user_id,side\na,X\nb,Y\nc,X\n";
  RunResult r = Cli("ingest --feedback " + P("fb.csv") + " --roster " + P("roster.csv"));
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["events"], 3);
  EXPECT_EQ(j["size_x"], 2);
  EXPECT_EQ(j["size_y"], 1);
  EXPECT_EQ(j["actions"]["thank"], 1);
}

TEST_F(CliTest, NonConvergenceExitsThree) {
  std::string d = P("m");
  ASSERT_EQ(Cli("simulate --nx 30 --ny 20 --out-dir " + d).code, 0);
  std::string models = " --roster " + d + "/roster.csv --model-xy " + d +
                       "/truth_xy.bin --model-yx " + d + "/truth_yx.bin";
  RunResult r = Cli("solve" + models + " --max-sweeps 1 --tol 1e-15 --no-gauge");
  EXPECT_EQ(r.code, 3);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_FALSE(j["converged"].get<bool>());

  RunResult ok = Cli("solve" + models);
  ASSERT_EQ(ok.code, 0);
  auto jo = nlohmann::json::parse(ok.out);
  EXPECT_TRUE(jo["converged"].get<bool>());
  EXPECT_LE(jo["residual"].get<double>(), 1e-10);
}

TEST_F(CliTest, VerifyRandomMarketPasses) {
  RunResult r = Cli("--seed 3 verify --random 6x4");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_LE(j["linf_mu"].get<double>(), 1e-6);
}

TEST_F(CliTest, PipelineIsBitIdenticalAcrossRunsAndThreads) {
  fs::path a = Pipeline("a", 1);
  fs::path b = Pipeline("b", 1);
  fs::path c = Pipeline("c", 4);
  for (const char* f : {"roster.csv", "feedback.csv", "model_xy.bin", "model_yx.bin",
                        "equilibrium.bin", "equilibrium.csv", "recs.csv", "fused.csv"}) {
    std::string ref = Slurp(a / f);
    EXPECT_FALSE(ref.empty()) << f;
    EXPECT_EQ(ref, Slurp(b / f)) << f;
    EXPECT_EQ(ref, Slurp(c / f)) << f;
  }
}

TEST_F(CliTest, MetricsOnRecommendations) {
  fs::path d = Pipeline("p", 1);
  RunResult r = Cli("metrics --recommendations " + (d / "recs.csv").string() + " --roster " +
                    (d / "roster.csv").string() + " --equilibrium " +
                    (d / "equilibrium.bin").string());
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  double g = j["gini"].get<double>();
  EXPECT_GE(g, 0.0);
  EXPECT_LT(g, 1.0);
  EXPECT_GT(j["expected_match_mass"].get<double>(), 0.0);
}

TEST_F(CliTest, RecommendSingleUser) {
  fs::path d = Pipeline("p", 1);
  RunResult r = Cli("recommend --roster " + (d / "roster.csv").string() + " --model-xy " +
                    (d / "model_xy.bin").string() + " --model-yx " +
                    (d / "model_yx.bin").string() + " --mode transfer --side Y --k 3 --user " +
                    "nosuch");
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, BenchTinyJson) {
  RunResult r = Cli("bench --sizes 1x1 --sweeps 2 --min-time-ms 0");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["points"].size(), 1u);
  EXPECT_TRUE(j["slope"].is_null());
}

TEST_F(CliTest, ConfigFileSuppliesOptions) {
  std::ofstream(P("cfg.toml")) << "seed = 4\n";
  std::string a = P("a"), b = P("b");
  ASSERT_EQ(Cli("--config " + P("cfg.toml") + " simulate --nx 10 --ny 8 --out-dir " + a).code, 0);
  ASSERT_EQ(Cli("--seed 4 simulate --nx 10 --ny 8 --out-dir " + b).code, 0);
  EXPECT_EQ(Slurp(fs::path(a) / "feedback.csv"), Slurp(fs::path(b) / "feedback.csv"));
  std::ofstream(P("broken.toml")) << "seed = [\n";
  EXPECT_EQ(Cli("--config " + P("broken.toml") + " bench --sizes 1x1").code, 1);
}

TEST_F(CliTest, OutFlagWritesReport) {
  ASSERT_EQ(Cli("--out " + P("r.json") + " bench --sizes 1x1 --sweeps 1 --min-time-ms 0").code, 0);
  auto j = nlohmann::json::parse(Slurp(P("r.json")));
  EXPECT_EQ(j["solver"], "exact");
}

}  // namespace
}  // namespace tumatch
