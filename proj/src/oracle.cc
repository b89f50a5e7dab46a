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

#include "tumatch/oracle.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tumatch::oracle {
namespace {

// Kept separate from the solver's residual so the checker shares no code
// with the path it verifies.
double MarginalViolation(const EquilibriumMatching& m) {
  const size_t nx = m.mu.rows(), ny = m.mu.cols();
  double worst = 0.0;
  for (size_t x = 0; x < nx; ++x) {
    double row = m.mu_x0[x];
    for (size_t y = 0; y < ny; ++y) row += m.mu(x, y);
    worst = std::max(worst, std::abs(row - 1.0));
  }
  for (size_t y = 0; y < ny; ++y) {
    double col = m.mu_y0[y];
    for (size_t x = 0; x < nx; ++x) col += m.mu(x, y);
    worst = std::max(worst, std::abs(col - 1.0));
  }
  return worst;
}

}  // namespace

std::vector<double> DemandSoftmax(std::span<const double> utilities) {
  double shift = 0.0;  // outside option
  for (double u : utilities) {
    if (!std::isfinite(u)) throw std::invalid_argument("non-finite utility");
    shift = std::max(shift, u);
  }
  std::vector<double> p(utilities.size() + 1);
  double total = std::exp(-shift);
  for (size_t i = 0; i < utilities.size(); ++i) {
    p[i] = std::exp(utilities[i] - shift);
    total += p[i];
  }
  p.back() = std::exp(-shift);
  for (double& v : p) v /= total;
  return p;
}

SideDemands ComputeDemands(const ScoreMatrix& scores, const Matrix& tau) {
  const size_t nx = scores.size_x(), ny = scores.size_y();
  SideDemands out{Matrix(nx, ny), Matrix(nx, ny), std::vector<double>(nx),
                  std::vector<double>(ny)};
  std::vector<double> u(ny);
  for (size_t x = 0; x < nx; ++x) {
    for (size_t y = 0; y < ny; ++y) u[y] = scores.p_xy(x, y) - tau(x, y);
    const auto p = DemandSoftmax(u);
    for (size_t y = 0; y < ny; ++y) out.from_x(x, y) = p[y];
    out.outside_x[x] = p[ny];
  }
  u.resize(nx);
  for (size_t y = 0; y < ny; ++y) {
    for (size_t x = 0; x < nx; ++x) u[x] = scores.p_yx(x, y) + tau(x, y);
    const auto p = DemandSoftmax(u);
    for (size_t x = 0; x < nx; ++x) out.from_y(x, y) = p[x];
    out.outside_y[y] = p[nx];
  }
  return out;
}

TatonnementResult TatonnementEquilibrium(const ScoreMatrix& scores,
                                         const TatonnementConfig& config,
                                         const std::optional<Matrix>& initial_tau) {
  const size_t nx = scores.size_x(), ny = scores.size_y();
  if (nx > config.size_cap || ny > config.size_cap) {
    throw std::invalid_argument("market exceeds the oracle size cap of " +
                                std::to_string(config.size_cap));
  }
  if (!(config.step > 0.0 && config.step <= 1.0)) {
    throw std::invalid_argument("tatonnement step must lie in (0, 1]");
  }
  ValidateScores(scores);
  TatonnementResult result;
  Matrix tau = initial_tau.value_or(Matrix(nx, ny));
  if (tau.rows() != nx || tau.cols() != ny) {
    throw std::invalid_argument("initial tau has the wrong shape");
  }
  for (int iter = 0;; ++iter) {
    SideDemands demand = ComputeDemands(scores, tau);
    double gap = 0.0;
    Matrix log_gap(nx, ny);
    for (size_t x = 0; x < nx; ++x) {
      for (size_t y = 0; y < ny; ++y) {
        log_gap(x, y) = std::log(demand.from_x(x, y)) - std::log(demand.from_y(x, y));
        gap = std::max(gap, std::abs(log_gap(x, y)));
      }
    }
    result.gap_trace.push_back(gap);
    if (gap <= config.tol) {
      result.iterations = iter;
      result.matching.mu = std::move(demand.from_x);
      result.matching.mu_x0 = std::move(demand.outside_x);
      result.matching.mu_y0 = std::move(demand.outside_y);
      result.matching.iterations = iter;
      result.matching.converged = true;
      result.matching.residual = MarginalViolation(result.matching);
      result.transfers.tau = std::move(tau);
      return result;
    }
    if (iter >= config.max_iters) {
      throw std::runtime_error("tatonnement did not converge in " +
                               std::to_string(config.max_iters) +
                               " iterations (gap " + std::to_string(gap) + ")");
    }
    for (size_t x = 0; x < nx; ++x) {
      for (size_t y = 0; y < ny; ++y) tau(x, y) += 0.5 * config.step * log_gap(x, y);
    }
  }
}

EquilibriumReport CheckEquilibrium(const ScoreMatrix& scores,
                                   const EquilibriumMatching& matching,
                                   const Transfers& transfers, double tol) {
  const size_t nx = scores.size_x(), ny = scores.size_y();
  if (matching.mu.rows() != nx || matching.mu.cols() != ny ||
      transfers.tau.rows() != nx || transfers.tau.cols() != ny ||
      matching.mu_x0.size() != nx || matching.mu_y0.size() != ny) {
    throw std::invalid_argument("check_equilibrium: shapes disagree");
  }
  EquilibriumReport report;
  report.tol = tol;
  report.marginal_violation = MarginalViolation(matching);

  const SideDemands demand = ComputeDemands(scores, transfers.tau);
  for (size_t x = 0; x < nx; ++x) {
    for (size_t y = 0; y < ny; ++y) {
      report.demand_gap = std::max(
          report.demand_gap, std::abs(demand.from_x(x, y) - demand.from_y(x, y)));
      const double closed =
          std::exp(0.5 * (scores.p_xy(x, y) + scores.p_yx(x, y))) *
          std::sqrt(std::max(matching.mu_x0[x], 0.0)) *
          std::sqrt(std::max(matching.mu_y0[y], 0.0));
      report.closed_form_gap =
          std::max(report.closed_form_gap, std::abs(matching.mu(x, y) - closed));
    }
  }
  report.pass = report.marginal_violation <= tol && report.demand_gap <= tol &&
                report.closed_form_gap <= tol;
  return report;
}

}  // namespace tumatch::oracle
