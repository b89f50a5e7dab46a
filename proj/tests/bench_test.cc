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


#include "tumatch/bench.h"

#include <cmath>
#include <cstdio>
#include <vector>

#include <gtest/gtest.h>
#include "json.hpp"

namespace tumatch {
namespace {

TEST(LogLogSlope, RecoversPowerLaw) {
  std::vector<double> xs = {1.0, 2.0, 5.0, 11.0, 40.0};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(3.0 * std::pow(x, 1.3));
  EXPECT_NEAR(LogLogSlope(xs, ys), 1.3, 1e-12);
}

TEST(LogLogSlope, FewerThanTwoPointsIsNan) {
  std::vector<double> one = {4.0};
  EXPECT_TRUE(std::isnan(LogLogSlope(one, one)));
}

TEST(RandomModels, DeterministicAndShaped) {
  auto [a_xy, a_yx] = RandomModels(7, 5, 3, 9);
  auto [b_xy, b_yx] = RandomModels(7, 5, 3, 9);
  EXPECT_EQ(a_xy, b_xy);
  EXPECT_EQ(a_yx, b_yx);
  EXPECT_EQ(a_xy.size_x(), 7u);
  EXPECT_EQ(a_xy.size_y(), 5u);
  EXPECT_EQ(a_yx.direction, Direction::kYToX);
  auto [c_xy, c_yx] = RandomModels(7, 5, 3, 10);
  EXPECT_FALSE(a_xy == c_xy);
}

TEST(ExactBench, TinyReportIsWellFormed) {
  BenchOptions options;
  options.sweeps = 3;
  options.min_time_ms = 0.0;
  BenchReport report = RunExactBench({{1, 1}, {4, 3}}, options);
  ASSERT_EQ(report.points.size(), 2u);
  EXPECT_FALSE(report.approximate);
  for (const BenchPoint& p : report.points) {
    EXPECT_GT(p.per_sweep_ms, 0.0);
    EXPECT_EQ(p.sweeps, 3);
  }
  auto json = nlohmann::json::parse(report.ToJson());
  EXPECT_EQ(json["solver"], "exact");
  EXPECT_EQ(json["points"].size(), 2u);
  EXPECT_EQ(json["points"][1]["size_x"], 4);
}

TEST(ExactBench, SingleSizeSlopeIsNull) {
  BenchOptions options;
  options.sweeps = 1;
  options.min_time_ms = 0.0;
  BenchReport report = RunExactBench({{2, 2}}, options);
  EXPECT_TRUE(std::isnan(report.slope));
  auto json = nlohmann::json::parse(report.ToJson());
  EXPECT_TRUE(json["slope"].is_null());
}

// Fixed head and tail sizes: per-sweep work is proportional to |X| + |Y|.
TEST(ApproxBench, SweepTimeLinearInUsers) {
  BenchOptions options;
  options.min_time_ms = 1000.0;
  ApproxConfig aconfig = ApproxConfig::Parse("top_m=64,tail=256");
  BenchReport report =
      RunApproxBench({{500, 500}, {1000, 1000}, {2000, 2000}, {4000, 4000}}, options, aconfig);
  ASSERT_EQ(report.points.size(), 4u);
  EXPECT_TRUE(report.approximate);
  for (const BenchPoint& p : report.points) {
    std::printf("approx %zux%zu: %.4f ms/sweep, setup %.1f ms\n", p.size_x, p.size_y,
                p.per_sweep_ms, p.score_build_ms);
  }
  std::printf("slope vs |X|+|Y|: %.3f\n", report.slope);
  EXPECT_GE(report.slope, 0.85);
  EXPECT_LE(report.slope, 1.15);
}

}  // namespace
}  // namespace tumatch
