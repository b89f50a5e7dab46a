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

#include <optional>
#include <span>
#include <vector>

#include "tumatch/market.h"

namespace tumatch::oracle {

// Logit choice probabilities over n options plus an outside option with
// utility 0: result[i] = exp(u_i) / (1 + sum_j exp(u_j)) for i < n, and the
// outside option last. Max-shifted, so finite input never yields NaN.
std::vector<double> DemandSoftmax(std::span<const double> utilities);

struct TatonnementConfig {
  double step = 0.5;  // in (0, 1]
  double tol = 1e-10;  // on max |ln mu_x-side - ln mu_y-side|
  int max_iters = 100000;
  size_t size_cap = 50;
};

struct TatonnementResult {
  EquilibriumMatching matching;
  Transfers transfers;
  int iterations = 0;
  // max |ln mu_x-side - ln mu_y-side| before each update, and at exit.
  std::vector<double> gap_trace;
};

// Both sides' logit demands given transfers tau: u_xy = p_xy - tau,
// u_yx = p_yx + tau. Returns (x-side demand, y-side demand) indexed (x, y),
// and fills the outside-option shares when requested.
struct SideDemands {
  Matrix from_x;
  Matrix from_y;
  std::vector<double> outside_x;
  std::vector<double> outside_y;
};
SideDemands ComputeDemands(const ScoreMatrix& scores, const Matrix& tau);

// Adjusts tau += (step/2)(ln mu_x-side - ln mu_y-side) until the two demand
// systems agree. Throws std::runtime_error if it does not converge, and
// std::invalid_argument above the size cap.
TatonnementResult TatonnementEquilibrium(const ScoreMatrix& scores,
                                         const TatonnementConfig& config = {},
                                         const std::optional<Matrix>& initial_tau = {});

struct EquilibriumReport {
  double marginal_violation = 0.0;
  double demand_gap = 0.0;
  double closed_form_gap = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// (a) marginal constraints, (b) demand coincidence under tau, (c) mu against
// tilde_p sqrt(mu_x0) sqrt(mu_y0).
EquilibriumReport CheckEquilibrium(const ScoreMatrix& scores,
                                   const EquilibriumMatching& matching,
                                   const Transfers& transfers, double tol);

}  // namespace tumatch::oracle
