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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tumatch/equilibrium.h"
#include "tumatch/oracle.h"

namespace tumatch {
namespace {

ScoreMatrix RandomScores(size_t nx, size_t ny, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ScoreMatrix s{Matrix(nx, ny), Matrix(nx, ny)};
  for (double& v : s.p_xy.data()) v = unit(rng);
  for (double& v : s.p_yx.data()) v = unit(rng);
  return s;
}

// Marginal violations recomputed here, independent of Residual().
double MaxViolation(const EquilibriumMatching& m) {
  double worst = 0.0;
  for (size_t x = 0; x < m.mu.rows(); ++x) {
    double t = m.mu_x0[x];
    for (size_t y = 0; y < m.mu.cols(); ++y) t += m.mu(x, y);
    worst = std::max(worst, std::abs(t - 1.0));
  }
  for (size_t y = 0; y < m.mu.cols(); ++y) {
    double t = m.mu_y0[y];
    for (size_t x = 0; x < m.mu.rows(); ++x) t += m.mu(x, y);
    worst = std::max(worst, std::abs(t - 1.0));
  }
  return worst;
}

SolverConfig Tight(double tol = 1e-12) {
  SolverConfig c;
  c.tol = tol;
  return c;
}

TEST(ReciprocalWeight, Examples) {
  EXPECT_EQ(ReciprocalWeight(0.0, 0.0), 1.0);
  EXPECT_NEAR(ReciprocalWeight(1.0, 1.0), 2.718281828459045, 1e-15);
  EXPECT_NEAR(ReciprocalWeight(0.2, 0.6), 1.4918246976412703, 1e-15);
}

TEST(SolveIpfp, OneByOneZeroScores) {
  const auto w = ComputeReciprocalWeights({Matrix(1, 1, 0.0), Matrix(1, 1, 0.0)});
  const EquilibriumMatching m = SolveIpfp(w, Tight());
  EXPECT_TRUE(m.converged);
  EXPECT_NEAR(m.mu(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(m.mu_x0[0], 0.5, 1e-12);
  EXPECT_NEAR(m.mu_y0[0], 0.5, 1e-12);
}

TEST(SolveIpfp, OneByTwoGoldenRatio) {
  // s_y^2 + s_x s_y = 1 and s_x^2 + 2 s_x s_y = 1 give s_y / s_x = phi, so
  // mu_x0 = sqrt(5) - 2, mu_xy = (3 - sqrt(5)) / 2, mu_y0 = (sqrt(5) - 1) / 2.
  const double r5 = std::sqrt(5.0);
  const double mu_x0 = r5 - 2.0, mu_xy = (3.0 - r5) / 2.0, mu_y0 = (r5 - 1.0) / 2.0;
  ASSERT_NEAR(mu_x0 + 2.0 * mu_xy, 1.0, 1e-15);
  ASSERT_NEAR(mu_xy + mu_y0, 1.0, 1e-15);
  ASSERT_NEAR(std::sqrt(mu_y0 / mu_x0), (1.0 + r5) / 2.0, 1e-14);

  const auto w = ComputeReciprocalWeights({Matrix(1, 2, 0.0), Matrix(1, 2, 0.0)});
  const EquilibriumMatching m = SolveIpfp(w, Tight());
  EXPECT_NEAR(m.mu_x0[0], mu_x0, 1e-9);
  EXPECT_NEAR(m.mu(0, 0), mu_xy, 1e-9);
  EXPECT_NEAR(m.mu(0, 1), mu_xy, 1e-9);
  EXPECT_NEAR(m.mu_y0[0], mu_y0, 1e-9);
  EXPECT_NEAR(m.mu_y0[1], mu_y0, 1e-9);
}

TEST(SolveIpfp, AgreesWithTatonnementOnThreeByThree) {
  const ScoreMatrix s = RandomScores(3, 3, 7);
  const EquilibriumMatching m = SolveIpfp(ComputeReciprocalWeights(s), Tight());
  const auto orc = oracle::TatonnementEquilibrium(s);
  for (size_t i = 0; i < 9; ++i) {
    EXPECT_NEAR(m.mu.data()[i], orc.matching.mu.data()[i], 1e-6);
  }
}

TEST(SolveIpfp, FeasibleAndDemandsCoincide) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const size_t nx = 1 + seed % 7, ny = 1 + (seed * 3) % 11;
    const ScoreMatrix s = RandomScores(nx, ny, 100 + seed);
    const double tol = 1e-10;
    const EquilibriumMatching m = SolveIpfp(ComputeReciprocalWeights(s), Tight(tol));
    ASSERT_TRUE(m.converged);
    EXPECT_LE(MaxViolation(m), tol);
    EXPECT_LE(m.residual, tol);
    const Transfers t = RecoverTransfers(s, m);
    const oracle::SideDemands dem = oracle::ComputeDemands(s, t.tau);
    for (size_t i = 0; i < nx * ny; ++i) {
      EXPECT_NEAR(dem.from_x.data()[i], dem.from_y.data()[i], 10 * tol);
    }
  }
}

TEST(SolveIpfp, ScaledWeightsStillConverge) {
  const ScoreMatrix s = RandomScores(30, 20, 5);
  for (double c : {1e-4, 1e-2, 1e2, 1e4}) {
    ReciprocalWeights w = ComputeReciprocalWeights(s);
    for (double& v : w.tilde_p.data()) v *= c;
    const EquilibriumMatching m = SolveIpfp(w, Tight(1e-10));
    EXPECT_TRUE(m.converged) << c;
    EXPECT_LE(MaxViolation(m), 1e-10) << c;
  }
}

TEST(SolveIpfp, GaugeBalancingDoesNotMoveTheFixedPoint) {
  const ScoreMatrix s = RandomScores(12, 9, 3);
  SolverConfig plain = Tight();
  plain.balance_gauge = false;
  plain.max_sweeps = 100000;
  const EquilibriumMatching a = SolveIpfp(ComputeReciprocalWeights(s), plain);
  const EquilibriumMatching b = SolveIpfp(ComputeReciprocalWeights(s), Tight());
  ASSERT_TRUE(a.converged);
  ASSERT_TRUE(b.converged);
  for (size_t i = 0; i < a.mu.data().size(); ++i) {
    EXPECT_NEAR(a.mu.data()[i], b.mu.data()[i], 1e-10);
  }
  EXPECT_LE(b.iterations, a.iterations);
}

TEST(SolveIpfp, DampedUpdatesConverge) {
  const ScoreMatrix s = RandomScores(8, 8, 21);
  SolverConfig c = Tight(1e-10);
  c.damping = 0.5;
  c.max_sweeps = 100000;
  const EquilibriumMatching m = SolveIpfp(ComputeReciprocalWeights(s), c);
  EXPECT_TRUE(m.converged);
  EXPECT_LE(MaxViolation(m), 1e-10);
}

TEST(SolveIpfp, ThreadCountDoesNotChangeBits) {
  const ScoreMatrix s = RandomScores(257, 1031, 9);
  SolverConfig one = Tight(1e-11);
  SolverConfig many = one;
  many.threads = 4;
  const EquilibriumMatching a = SolveIpfp(ComputeReciprocalWeights(s, 1), one);
  const EquilibriumMatching b = SolveIpfp(ComputeReciprocalWeights(s, 4), many);
  EXPECT_EQ(a.mu, b.mu);
  EXPECT_EQ(a.mu_x0, b.mu_x0);
  EXPECT_EQ(a.mu_y0, b.mu_y0);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(SolveIpfp, ReportsNonConvergence) {
  const ScoreMatrix s = RandomScores(40, 40, 1);
  SolverConfig c = Tight(1e-14);
  c.max_sweeps = 1;
  c.balance_gauge = false;
  const EquilibriumMatching m = SolveIpfp(ComputeReciprocalWeights(s), c);
  EXPECT_FALSE(m.converged);
  EXPECT_EQ(m.iterations, 1);
  EXPECT_GT(m.residual, 1e-14);
}

TEST(SolveIpfp, RejectsBadInput) {
  ReciprocalWeights w{Matrix(2, 2, 1.0)};
  w.tilde_p(0, 1) = 0.0;
  EXPECT_THROW(SolveIpfp(w), DataError);
  w.tilde_p(0, 1) = INFINITY;
  EXPECT_THROW(SolveIpfp(w), DataError);
  EXPECT_THROW(SolveIpfp(ReciprocalWeights{Matrix(0, 3)}), DataError);
  SolverConfig c;
  c.tol = 0.0;
  EXPECT_THROW(SolveIpfp(ReciprocalWeights{Matrix(1, 1, 1.0)}, c), std::invalid_argument);
  c = SolverConfig{};
  c.damping = 1.5;
  EXPECT_THROW(ValidateSolverConfig(c), std::invalid_argument);
  c = SolverConfig{};
  c.max_sweeps = 0;
  EXPECT_THROW(ValidateSolverConfig(c), std::invalid_argument);
  EXPECT_THROW(ComputeReciprocalWeights({Matrix(2, 2), Matrix(2, 3)}), DataError);
}

TEST(SinglesRoot, SolvesQuadratic) {
  EXPECT_EQ(SinglesRoot(0.0), 1.0);
  for (double b : {1e-12, 0.1, 1.0, 3.7, 1e3, 1e8}) {
    const double s = SinglesRoot(b);
    EXPECT_NEAR((s * s + b * s) / 1.0, 1.0, 1e-13) << b;
  }
  EXPECT_GT(SinglesRoot(1e300), 0.0);
}

TEST(RunIpfp, CustomKernelMatchesExact) {
  const ScoreMatrix s = RandomScores(6, 5, 14);
  const ReciprocalWeights w = ComputeReciprocalWeights(s);
  const SolverConfig c = Tight();
  // Naive sequential sums; the result must agree with the lane-ordered kernel.
  IpfpSums naive;
  naive.row_sums = [&](std::span<const double> sy, std::span<double> b) {
    for (size_t x = 0; x < 6; ++x) {
      b[x] = 0.0;
      for (size_t y = 0; y < 5; ++y) b[x] += w.tilde_p(x, y) * sy[y];
    }
  };
  naive.col_sums = [&](std::span<const double> sx, std::span<double> cc) {
    for (size_t y = 0; y < 5; ++y) {
      cc[y] = 0.0;
      for (size_t x = 0; x < 6; ++x) cc[y] += w.tilde_p(x, y) * sx[x];
    }
  };
  int calls = 0;
  const IpfpIterate it = RunIpfp(6, 5, c, naive, [&](int) { ++calls; });
  const EquilibriumMatching m = SolveIpfp(w, c);
  EXPECT_GT(calls, 0);
  for (size_t x = 0; x < 6; ++x) EXPECT_NEAR(it.sqrt_mu_x0[x] * it.sqrt_mu_x0[x], m.mu_x0[x], 1e-11);
  for (size_t y = 0; y < 5; ++y) EXPECT_NEAR(it.sqrt_mu_y0[y] * it.sqrt_mu_y0[y], m.mu_y0[y], 1e-11);
}

TEST(MatchingProbabilities, Examples) {
  EXPECT_EQ(MatchingProbabilities(std::vector<double>{0.25}, std::vector<double>{0.25},
                                  {Matrix(1, 1, 1.0)})(0, 0),
            0.25);
  EXPECT_NEAR(MatchingProbabilities(std::vector<double>{1.0}, std::vector<double>{1.0},
                                    {Matrix(1, 1, std::exp(1.0))})(0, 0),
              std::exp(1.0), 1e-15);
  EXPECT_THROW(MatchingProbabilities(std::vector<double>{-0.1}, std::vector<double>{1.0},
                                     {Matrix(1, 1, 1.0)}),
               std::invalid_argument);
  EXPECT_THROW(MatchingProbabilities(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0},
                                     {Matrix(1, 1, 1.0)}),
               std::invalid_argument);
}

TEST(RecoverTransfers, SymmetricMarketHasZeroTransfers) {
  const size_t n = 15;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Circulant and symmetric: every user sees the same multiset of scores.
  std::vector<double> f(n);
  for (size_t k = 0; k <= n / 2; ++k) f[k] = f[(n - k) % n] = unit(rng);
  Matrix sym(n, n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) sym(i, j) = f[(i + n - j) % n];
  }
  const ScoreMatrix s{sym, sym};
  const EquilibriumMatching m = SolveIpfp(ComputeReciprocalWeights(s), Tight());
  const Transfers t = RecoverTransfers(s, m);
  for (double v : t.tau.data()) EXPECT_NEAR(v, 0.0, 1e-10);
}

TEST(RecoverTransfers, OneByOneAndFormula) {
  const ScoreMatrix zero{Matrix(1, 1, 0.0), Matrix(1, 1, 0.0)};
  const EquilibriumMatching m = SolveIpfp(ComputeReciprocalWeights(zero), Tight());
  EXPECT_NEAR(RecoverTransfers(zero, m).tau(0, 0), 0.0, 1e-12);

  EquilibriumMatching hand;
  hand.mu = Matrix(1, 1, 0.1);
  hand.mu_x0 = {0.2};
  hand.mu_y0 = {0.05};
  const ScoreMatrix s{Matrix(1, 1, 0.9), Matrix(1, 1, 0.3)};
  EXPECT_NEAR(RecoverTransfers(s, hand).tau(0, 0), 0.3 + 0.5 * std::log(4.0), 1e-15);
  hand.mu_y0 = {0.0};
  EXPECT_THROW(RecoverTransfers(s, hand), DataError);
}

TEST(Residual, Examples) {
  EquilibriumMatching exact;
  exact.mu = Matrix(1, 1, 0.5);
  exact.mu_x0 = {0.5};
  exact.mu_y0 = {0.5};
  EXPECT_LE(Residual(exact), 1e-15);
  exact.mu_x0[0] += 0.01;
  EXPECT_GE(Residual(exact), 0.01);

  const ScoreMatrix s = RandomScores(4, 6, 2);
  EquilibriumMatching m = SolveIpfp(ComputeReciprocalWeights(s), Tight(1e-10));
  EXPECT_LE(Residual(m), 1e-10);
  m.mu_x0[2] += 0.01;
  EXPECT_GE(Residual(m), 0.01 - 1e-10);  // started within 1e-10 of feasible
  EXPECT_NEAR(Residual(m), MaxViolation(m), 1e-15);
}

TEST(EquilibriumIo, BinaryRoundTripAndCsv) {
  const auto dir = std::filesystem::temp_directory_path() / "tumatch_eq_io";
  std::filesystem::create_directories(dir);
  const ScoreMatrix s = RandomScores(2, 3, 8);
  const EquilibriumMatching m = SolveIpfp(ComputeReciprocalWeights(s), Tight());
  SaveEquilibrium(m, (dir / "eq.bin").string());
  const EquilibriumMatching back = LoadEquilibrium((dir / "eq.bin").string());
  EXPECT_EQ(back.mu, m.mu);
  EXPECT_EQ(back.mu_x0, m.mu_x0);
  EXPECT_EQ(back.mu_y0, m.mu_y0);
  EXPECT_EQ(back.residual, m.residual);
  EXPECT_EQ(back.iterations, m.iterations);
  EXPECT_EQ(back.converged, m.converged);

  const Market market({"a", "b"}, {"p", "q", "r"}, {});
  WriteEquilibriumCsv(market, m, RecoverTransfers(s, m), (dir / "eq.csv").string());
  std::ifstream in(dir / "eq.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x_id,y_id,mu,tau");
  std::getline(in, line);
  char x[8], y[8];
  double mu = 0.0, tau = 0.0;
  ASSERT_EQ(std::sscanf(line.c_str(), "%7[^,],%7[^,],%lf,%lf", x, y, &mu, &tau), 4);
  EXPECT_EQ(std::string(x), "a");
  EXPECT_EQ(std::string(y), "p");
  EXPECT_EQ(mu, m.mu(0, 0));
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);

  std::ofstream(dir / "bad.bin") << "TUFM";
  EXPECT_THROW(LoadEquilibrium((dir / "bad.bin").string()), DataError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace tumatch
