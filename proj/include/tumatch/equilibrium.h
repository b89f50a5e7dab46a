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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tumatch/market.h"

namespace tumatch {

struct SolverConfig {
  double tol = 1e-10;     // max marginal violation
  int max_sweeps = 1000;  // x-update + y-update pairs
  double damping = 1.0;   // in (0, 1], applied to the sqrt(mu0) updates
  // Rescales s_x by a and s_y by 1/a once per sweep so that the total-mass
  // identity sum(mu_x0) - sum(mu_y0) = |X| - |Y| (up to the current pair mass
  // imbalance) holds. The rescaling leaves every mu_xy unchanged and removes
  // the slowly contracting direction of plain IPFP.
  bool balance_gauge = true;
  int threads = 1;
};

void ValidateSolverConfig(const SolverConfig& config);

// tilde_p[x, y] = exp((p_xy + p_yx) / 2).
struct ReciprocalWeights {
  Matrix tilde_p;
};

double ReciprocalWeight(double p_xy, double p_yx);
ReciprocalWeights ComputeReciprocalWeights(const ScoreMatrix& scores, int threads = 1);

// Row and column sums the IPFP kernel needs; exact and approximate solvers
// plug in different implementations.
struct IpfpSums {
  // b[x] = sum_y w[x, y] s_y[y]
  std::function<void(std::span<const double> s_y, std::span<double> b)> row_sums;
  // c[y] = sum_x w[x, y] s_x[x]
  std::function<void(std::span<const double> s_x, std::span<double> c)> col_sums;
};

struct IpfpIterate {
  std::vector<double> sqrt_mu_x0;
  std::vector<double> sqrt_mu_y0;
  double residual = 0.0;  // measured on the sums the kernel was given
  int sweeps = 0;
  bool converged = false;
};

// Alternating closed-form updates s <- sqrt(1 + (b/2)^2) - b/2 starting from
// s = 1. Throws NumericalError on NaN.
IpfpIterate RunIpfp(size_t size_x, size_t size_y, const SolverConfig& config,
                    const IpfpSums& sums,
                    const std::function<void(int sweep)>& on_sweep = {});

// Dense sums over tilde_p, parallel over rows (columns) with the LaneDot
// summation order, so results do not depend on `threads`.
IpfpSums ExactSums(const Matrix& tilde_p, int threads);

// Positive root of s^2 + b s - 1 = 0.
double SinglesRoot(double b);

// Exact solver over a dense weight matrix. Non-convergence is reported via
// EquilibriumMatching::converged, not thrown.
EquilibriumMatching SolveIpfp(const ReciprocalWeights& weights,
                              const SolverConfig& config = {});

// mu[x, y] = tilde_p[x, y] sqrt(mu_x0[x]) sqrt(mu_y0[y]). Throws
// std::invalid_argument for negative singles probabilities.
Matrix MatchingProbabilities(std::span<const double> mu_x0,
                             std::span<const double> mu_y0,
                             const ReciprocalWeights& weights);

// tau = (p_xy - p_yx) / 2 + ln(mu_x0 / mu_y0) / 2. Throws DataError when a
// singles probability is zero.
Transfers RecoverTransfers(const ScoreMatrix& scores, const EquilibriumMatching& matching);

// max over rows and columns of |sum mu + mu0 - 1|.
double Residual(const EquilibriumMatching& matching);

void SaveEquilibrium(const EquilibriumMatching& matching, const std::string& path);
EquilibriumMatching LoadEquilibrium(const std::string& path);
// x_id,y_id,mu,tau
void WriteEquilibriumCsv(const Market& market, const EquilibriumMatching& matching,
                         const Transfers& transfers, const std::string& path);

}  // namespace tumatch
