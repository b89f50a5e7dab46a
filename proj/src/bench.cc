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

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "json.hpp"

namespace tumatch {
namespace {

using Clock = std::chrono::steady_clock;

double Ms(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

SolverConfig FixedSweeps(int sweeps, int threads) {
  SolverConfig config;
  config.tol = std::numeric_limits<double>::denorm_min();
  config.max_sweeps = sweeps;
  config.threads = threads;
  return config;
}

}  // namespace

double LogLogSlope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) return std::nan("");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxy += dx * (std::log(ys[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : std::nan("");
}

std::pair<FactorModel, FactorModel> RandomModels(size_t size_x, size_t size_y, size_t d,
                                                 uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(std::sqrt(static_cast<double>(d))));
  std::normal_distribution<double> bias(0.0, 0.5);
  auto make = [&](Direction dir) {
    FactorModel m;
    m.direction = dir;
    m.d = d;
    m.u_x = Matrix(size_x, d);
    m.v_y = Matrix(size_y, d);
    for (double& v : m.u_x.data()) v = gauss(rng);
    for (double& v : m.v_y.data()) v = gauss(rng);
    m.bias_x.resize(size_x);
    m.bias_y.resize(size_y);
    for (double& v : m.bias_x) v = bias(rng);
    for (double& v : m.bias_y) v = bias(rng);
    return m;
  };
  FactorModel xy = make(Direction::kXToY);
  FactorModel yx = make(Direction::kYToX);
  return {std::move(xy), std::move(yx)};
}

BenchReport RunExactBench(const std::vector<std::pair<size_t, size_t>>& sizes,
                          const BenchOptions& options) {
  BenchReport report;
  report.d = options.d;
  std::vector<double> xs, ys;
  for (const auto& [nx, ny] : sizes) {
    const auto [xy, yx] = RandomModels(nx, ny, options.d, options.seed);
    const auto t0 = Clock::now();
    const ScoreMatrix scores = BuildScoreMatrix(xy, yx, options.threads);
    const auto t1 = Clock::now();
    const ReciprocalWeights w = ComputeReciprocalWeights(scores, options.threads);
    const IpfpSums sums = ExactSums(w.tilde_p, options.threads);
    const SolverConfig config = FixedSweeps(options.sweeps, options.threads);

    BenchPoint point{nx, ny, Ms(t0, t1), std::numeric_limits<double>::infinity(), 0};
    double spent = 0.0;
    do {
      const auto s0 = Clock::now();
      const IpfpIterate it = RunIpfp(nx, ny, config, sums);
      const auto s1 = Clock::now();
      spent += Ms(s0, s1);
      const int sweeps = std::max(it.sweeps, 1);
      point.per_sweep_ms = std::min(point.per_sweep_ms, Ms(s0, s1) / sweeps);
      point.sweeps = it.sweeps;
    } while (spent < options.min_time_ms);
    report.points.push_back(point);
    xs.push_back(static_cast<double>(nx) * static_cast<double>(ny));
    ys.push_back(point.per_sweep_ms);
  }
  report.slope = LogLogSlope(xs, ys);
  return report;
}

BenchReport RunApproxBench(const std::vector<std::pair<size_t, size_t>>& sizes,
                           const BenchOptions& options, const ApproxConfig& aconfig) {
  BenchReport report;
  report.approximate = true;
  report.d = options.d;
  std::vector<double> xs, ys;
  ApproxConfig ac = aconfig;
  ac.track_variance = false;
  for (const auto& [nx, ny] : sizes) {
    const auto [xy, yx] = RandomModels(nx, ny, options.d, options.seed);
    const auto t0 = Clock::now();
    const ApproxKernel kernel(xy, yx, ac, options.threads);
    const auto t1 = Clock::now();
    const IpfpSums sums = kernel.Sums();
    const SolverConfig config = FixedSweeps(options.sweeps, options.threads);

    BenchPoint point{nx, ny, Ms(t0, t1), std::numeric_limits<double>::infinity(), 0};
    double spent = 0.0;
    do {
      const auto s0 = Clock::now();
      const IpfpIterate it = RunIpfp(nx, ny, config, sums);
      const auto s1 = Clock::now();
      spent += Ms(s0, s1);
      point.per_sweep_ms = std::min(point.per_sweep_ms, Ms(s0, s1) / std::max(it.sweeps, 1));
      point.sweeps = it.sweeps;
    } while (spent < options.min_time_ms);
    report.points.push_back(point);
    xs.push_back(static_cast<double>(nx + ny));
    ys.push_back(point.per_sweep_ms);
  }
  report.slope = LogLogSlope(xs, ys);
  return report;
}

std::string BenchReport::ToJson() const {
  nlohmann::json j;
  j["solver"] = approximate ? "approx" : "exact";
  j["d"] = d;
  j["slope_against"] = approximate ? "size_x+size_y" : "size_x*size_y";
  j["slope"] = std::isfinite(slope) ? nlohmann::json(slope) : nlohmann::json(nullptr);
  j["points"] = nlohmann::json::array();
  for (const auto& p : points) {
    j["points"].push_back({{"size_x", p.size_x},
                           {"size_y", p.size_y},
                           {approximate ? "setup_ms" : "score_build_ms", p.score_build_ms},
                           {"per_sweep_ms", p.per_sweep_ms},
                           {"sweeps", p.sweeps}});
  }
  return j.dump(2);
}

}  // namespace tumatch
