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
#include <vector>

#include "tumatch/market.h"
#include "tumatch/mf.h"

namespace tumatch {

struct SimConfig {
  size_t n_x = 100;
  size_t n_y = 100;
  size_t d_true = 4;
  // Receiver at popularity rank r (1-based) gets logit offset -skew * ln(r),
  // i.e. like odds proportional to r^-skew.
  double popularity_skew = 0.0;
  double events_per_user = 20.0;
  uint64_t seed = 0;
  double base_logit = 1.0;
  // Standard deviation of the bilinear term u . v.
  double factor_scale = 1.0;
};

struct SimulatedMarket {
  Market market;
  ScoreMatrix truth;
  // Generating models; Score(truth_xy, x, y) == truth.p_xy(x, y).
  FactorModel truth_xy;
  FactorModel truth_yx;
  std::vector<double> attractiveness_x;  // logit offsets
  std::vector<double> attractiveness_y;
};

// Each user swipes on events_per_user distinct random candidates (like with
// the true probability, else nope); every like receives a thank/sorry reply
// drawn from the recipient's probability. Deterministic per seed.
SimulatedMarket GenerateMarket(const SimConfig& config);

// Likes received by each user of `side`.
std::vector<double> LikeInDegree(const Market& market, Side side);

}  // namespace tumatch
