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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tumatch/approx.h"

namespace tumatch {

struct BenchPoint {
  size_t size_x = 0;
  size_t size_y = 0;
  double score_build_ms = 0.0;  // dense score matrix (exact) or setup (approx)
  double per_sweep_ms = 0.0;
  int sweeps = 0;
};

struct BenchReport {
  bool approximate = false;
  size_t d = 0;
  std::vector<BenchPoint> points;
  // Least-squares slope of log per-sweep time against log |X||Y| (exact) or
  // log(|X| + |Y|) (approximate). NaN with fewer than two sizes.
  double slope = 0.0;

  std::string ToJson() const;
};

struct BenchOptions {
  size_t d = 8;
  int sweeps = 10;
  uint64_t seed = 0;
  int threads = 1;
  // Each size is re-run until this much solver time accumulates; the fastest
  // per-sweep time is reported.
  double min_time_ms = 200.0;
};

// Least-squares slope of log(ys) on log(xs).
double LogLogSlope(std::span<const double> xs, std::span<const double> ys);

// Random factor models of the given shape, scored N(0, 1)-ish.
std::pair<FactorModel, FactorModel> RandomModels(size_t size_x, size_t size_y, size_t d,
                                                 uint64_t seed);

BenchReport RunExactBench(const std::vector<std::pair<size_t, size_t>>& sizes,
                          const BenchOptions& options);
BenchReport RunApproxBench(const std::vector<std::pair<size_t, size_t>>& sizes,
                           const BenchOptions& options, const ApproxConfig& aconfig);

}  // namespace tumatch
