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

#include "tumatch/equilibrium.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "tumatch/binary_io.h"

namespace tumatch {
namespace {

constexpr std::array<char, 4> kEquilibriumMagic = {'T', 'U', 'E', 'Q'};

void ExactRowSums(const Matrix& w, std::span<const double> s_y, std::span<double> b,
                  int threads) {
  ParallelFor(w.rows(), threads, [&](size_t begin, size_t end) {
    for (size_t x = begin; x < end; ++x) b[x] = LaneDot(w.row(x), s_y);
  });
}

// Row x feeds lane x % 4, matching LaneDot over a column. Each worker owns a
// stripe of columns and streams the matrix in row-major order.
void ExactColSums(const Matrix& w, std::span<const double> s_x, std::span<double> c,
                  int threads) {
  const size_t ny = w.cols();
  const size_t stripes =
      std::min<size_t>(static_cast<size_t>(std::max(threads, 1)), (ny + 7) / 8);
  ParallelFor(stripes, threads, [&](size_t begin, size_t end) {
    for (size_t st = begin; st < end; ++st) {
      const size_t c0 = ny * st / stripes;
      const size_t width = ny * (st + 1) / stripes - c0;
      std::vector<double> lane(4 * width, 0.0);
      for (size_t x = 0; x < w.rows(); ++x) {
        double* acc = lane.data() + (x & 3) * width;
        const double* row = w.row(x).data() + c0;
        const double sx = s_x[x];
        for (size_t j = 0; j < width; ++j) acc[j] += row[j] * sx;
      }
      for (size_t j = 0; j < width; ++j) {
        c[c0 + j] = (lane[j] + lane[width + j]) + (lane[2 * width + j] + lane[3 * width + j]);
      }
    }
  });
}

double SequentialSum(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s;
}

double SequentialDot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void ValidateSolverConfig(const SolverConfig& config) {
  if (!(config.tol > 0.0)) throw std::invalid_argument("solver tol must be > 0");
  if (config.max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
  if (!(config.damping > 0.0 && config.damping <= 1.0)) {
    throw std::invalid_argument("damping must lie in (0, 1]");
  }
}

IpfpSums ExactSums(const Matrix& w, int threads) {
  IpfpSums sums;
  sums.row_sums = [&w, threads](std::span<const double> s_y, std::span<double> b) {
    ExactRowSums(w, s_y, b, threads);
  };
  sums.col_sums = [&w, threads](std::span<const double> s_x, std::span<double> c) {
    ExactColSums(w, s_x, c, threads);
  };
  return sums;
}

double ReciprocalWeight(double p_xy, double p_yx) { return std::exp(0.5 * (p_xy + p_yx)); }

ReciprocalWeights ComputeReciprocalWeights(const ScoreMatrix& scores, int threads) {
  if (scores.p_xy.rows() != scores.p_yx.rows() || scores.p_xy.cols() != scores.p_yx.cols()) {
    throw DataError("score matrices differ in shape");
  }
  ReciprocalWeights w{Matrix(scores.size_x(), scores.size_y())};
  ParallelFor(scores.size_x(), threads, [&](size_t begin, size_t end) {
    for (size_t x = begin; x < end; ++x) {
      for (size_t y = 0; y < scores.size_y(); ++y) {
        w.tilde_p(x, y) = ReciprocalWeight(scores.p_xy(x, y), scores.p_yx(x, y));
      }
    }
  });
  return w;
}

double SinglesRoot(double b) {
  const double half = 0.5 * b;
  // sqrt(1 + half^2) - half without cancellation for large b.
  return 1.0 / (half + std::hypot(1.0, half));
}

IpfpIterate RunIpfp(size_t nx, size_t ny, const SolverConfig& config,
                    const IpfpSums& sums, const std::function<void(int)>& on_sweep) {
  ValidateSolverConfig(config);
  IpfpIterate it;
  auto& s_x = it.sqrt_mu_x0;
  auto& s_y = it.sqrt_mu_y0;
  s_x.assign(nx, 1.0);
  s_y.assign(ny, 1.0);
  std::vector<double> b(nx), c(ny);
  bool have_c = false;
  const double damping = config.damping;

  while (true) {
    sums.row_sums(s_y, b);
    double residual = 0.0;
    for (size_t x = 0; x < nx; ++x) {
      const double r = std::abs(s_x[x] * b[x] + s_x[x] * s_x[x] - 1.0);
      if (std::isnan(r)) throw NumericalError("NaN in IPFP row sums");
      residual = std::max(residual, r);
    }
    if (have_c) {
      for (size_t y = 0; y < ny; ++y) {
        const double r = std::abs(s_y[y] * c[y] + s_y[y] * s_y[y] - 1.0);
        if (std::isnan(r)) throw NumericalError("NaN in IPFP column sums");
        residual = std::max(residual, r);
      }
    }
    it.residual = residual;
    if (have_c && residual <= config.tol) {
      it.converged = true;
      break;
    }
    if (it.sweeps >= config.max_sweeps) break;

    if (config.balance_gauge && have_c) {
      const double a = SequentialDot(s_x, s_x);
      const double bb = SequentialDot(s_y, s_y);
      const double pairs_x = SequentialDot(s_x, b);
      const double pairs_y = SequentialDot(s_y, c);
      const double gap = (static_cast<double>(nx) - pairs_x) -
                         (static_cast<double>(ny) - pairs_y);
      // Positive root t of a t^2 - gap t - bb = 0.
      const double disc = std::sqrt(gap * gap + 4.0 * a * bb);
      const double t = gap >= 0.0 ? (gap + disc) / (2.0 * a) : (2.0 * bb) / (disc - gap);
      if (std::isfinite(t) && t > 0.0) {
        const double alpha = std::sqrt(t);
        for (size_t x = 0; x < nx; ++x) {
          s_x[x] *= alpha;
          b[x] /= alpha;
        }
        for (size_t y = 0; y < ny; ++y) {
          s_y[y] /= alpha;
          c[y] *= alpha;
        }
      }
    }

    for (size_t x = 0; x < nx; ++x) {
      s_x[x] = (1.0 - damping) * s_x[x] + damping * SinglesRoot(b[x]);
    }
    sums.col_sums(s_x, c);
    for (size_t y = 0; y < ny; ++y) {
      s_y[y] = (1.0 - damping) * s_y[y] + damping * SinglesRoot(c[y]);
    }
    have_c = true;
    ++it.sweeps;
    if (on_sweep) on_sweep(it.sweeps);
  }
  return it;
}

EquilibriumMatching SolveIpfp(const ReciprocalWeights& weights, const SolverConfig& config) {
  const Matrix& w = weights.tilde_p;
  if (w.rows() == 0 || w.cols() == 0) throw DataError("empty weight matrix");
  for (double v : w.data()) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DataError("reciprocal weights must be finite and positive");
    }
  }
  IpfpIterate it = RunIpfp(w.rows(), w.cols(), config, ExactSums(w, config.threads));

  EquilibriumMatching m;
  m.mu_x0.resize(w.rows());
  m.mu_y0.resize(w.cols());
  for (size_t x = 0; x < w.rows(); ++x) m.mu_x0[x] = it.sqrt_mu_x0[x] * it.sqrt_mu_x0[x];
  for (size_t y = 0; y < w.cols(); ++y) m.mu_y0[y] = it.sqrt_mu_y0[y] * it.sqrt_mu_y0[y];
  m.mu = MatchingProbabilities(m.mu_x0, m.mu_y0, weights);
  m.iterations = it.sweeps;
  m.converged = it.converged;
  m.residual = Residual(m);
  return m;
}

Matrix MatchingProbabilities(std::span<const double> mu_x0, std::span<const double> mu_y0,
                             const ReciprocalWeights& weights) {
  const Matrix& w = weights.tilde_p;
  if (mu_x0.size() != w.rows() || mu_y0.size() != w.cols()) {
    throw std::invalid_argument("singles vectors do not match the weight shape");
  }
  std::vector<double> sx(mu_x0.size()), sy(mu_y0.size());
  for (size_t x = 0; x < sx.size(); ++x) {
    if (!(mu_x0[x] >= 0.0)) throw std::invalid_argument("negative mu_x0");
    sx[x] = std::sqrt(mu_x0[x]);
  }
  for (size_t y = 0; y < sy.size(); ++y) {
    if (!(mu_y0[y] >= 0.0)) throw std::invalid_argument("negative mu_y0");
    sy[y] = std::sqrt(mu_y0[y]);
  }
  Matrix mu(w.rows(), w.cols());
  for (size_t x = 0; x < w.rows(); ++x) {
    for (size_t y = 0; y < w.cols(); ++y) mu(x, y) = w(x, y) * sx[x] * sy[y];
  }
  return mu;
}

Transfers RecoverTransfers(const ScoreMatrix& scores, const EquilibriumMatching& matching) {
  const size_t nx = scores.size_x(), ny = scores.size_y();
  if (matching.mu_x0.size() != nx || matching.mu_y0.size() != ny) {
    throw DataError("matching and scores differ in shape");
  }
  for (double v : matching.mu_x0) {
    if (!(v > 0.0)) throw DataError("transfer undefined: mu_x0 has a zero entry");
  }
  for (double v : matching.mu_y0) {
    if (!(v > 0.0)) throw DataError("transfer undefined: mu_y0 has a zero entry");
  }
  Transfers t{Matrix(nx, ny)};
  for (size_t x = 0; x < nx; ++x) {
    const double log_x = std::log(matching.mu_x0[x]);
    for (size_t y = 0; y < ny; ++y) {
      t.tau(x, y) = 0.5 * (scores.p_xy(x, y) - scores.p_yx(x, y)) +
                    0.5 * (log_x - std::log(matching.mu_y0[y]));
    }
  }
  return t;
}

double Residual(const EquilibriumMatching& m) {
  const size_t nx = m.mu.rows(), ny = m.mu.cols();
  double worst = 0.0;
  std::vector<double> col(ny, 0.0);
  for (size_t x = 0; x < nx; ++x) {
    const auto row = m.mu.row(x);
    worst = std::max(worst, std::abs(SequentialSum(row) + m.mu_x0[x] - 1.0));
    for (size_t y = 0; y < ny; ++y) col[y] += row[y];
  }
  for (size_t y = 0; y < ny; ++y) {
    worst = std::max(worst, std::abs(col[y] + m.mu_y0[y] - 1.0));
  }
  return worst;
}

void SaveEquilibrium(const EquilibriumMatching& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  ContainerHeader header;
  header.magic = kEquilibriumMagic;
  header.d = 0;
  header.size_x = m.mu.rows();
  header.size_y = m.mu.cols();
  header.direction = kNoDirection;
  WriteHeader(out, header);
  WriteF64Block(out, m.mu.data());
  WriteF64Block(out, m.mu_x0);
  WriteF64Block(out, m.mu_y0);
  const double trailer[1] = {m.residual};
  WriteF64Block(out, trailer);
  WriteU64(out, static_cast<uint64_t>(m.iterations));
  WriteU64(out, m.converged ? 1 : 0);
  if (!out) throw DataError("write failed for " + path);
}

EquilibriumMatching LoadEquilibrium(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open equilibrium " + path);
  const ContainerHeader header = ReadHeader(in, kEquilibriumMagic);
  EquilibriumMatching m;
  m.mu = Matrix(header.size_x, header.size_y);
  m.mu_x0.resize(header.size_x);
  m.mu_y0.resize(header.size_y);
  ReadF64Block(in, m.mu.data());
  ReadF64Block(in, m.mu_x0);
  ReadF64Block(in, m.mu_y0);
  double trailer[1];
  ReadF64Block(in, trailer);
  m.residual = trailer[0];
  m.iterations = static_cast<int>(ReadU64(in));
  m.converged = ReadU64(in) != 0;
  return m;
}

void WriteEquilibriumCsv(const Market& market, const EquilibriumMatching& m,
                         const Transfers& transfers, const std::string& path) {
  if (m.mu.rows() != market.size_x() || m.mu.cols() != market.size_y()) {
    throw DataError("matching shape does not match the market");
  }
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot write " + path);
  std::fputs("x_id,y_id,mu,tau\n", f);
  for (size_t x = 0; x < m.mu.rows(); ++x) {
    for (size_t y = 0; y < m.mu.cols(); ++y) {
      std::fprintf(f, "%s,%s,%.17g,%.17g\n", market.men()[x].c_str(),
                   market.women()[y].c_str(), m.mu(x, y), transfers.tau(x, y));
    }
  }
  std::fclose(f);
}

}  // namespace tumatch
