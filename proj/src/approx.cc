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

#include "tumatch/approx.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace tumatch {
namespace {

std::mt19937_64 SubstreamRng(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

double Norm(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

// Calls visit(code') for every code' at Hamming distance exactly `radius`.
template <typename Visit>
void ForEachAtDistance(uint32_t code, int bits, int radius, int start, Visit&& visit) {
  if (radius == 0) {
    visit(code);
    return;
  }
  for (int b = start; b <= bits - radius; ++b) {
    ForEachAtDistance(code ^ (1u << b), bits, radius - 1, b + 1, visit);
  }
}

double WeightFromModels(const FactorModel& xy, const FactorModel& yx, size_t x, size_t y) {
  return ReciprocalWeight(Score(xy, x, y), Score(yx, x, y));
}

}  // namespace

ApproxConfig ApproxConfig::Parse(std::string_view text, ApproxConfig base) {
  ApproxConfig c = base;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view item = text.substr(start, end - start);
    start = end + 1;
    if (item.empty()) continue;
    const size_t eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("approx option '" + std::string(item) + "' needs key=value");
    }
    const std::string key(item.substr(0, eq));
    const std::string value(item.substr(eq + 1));
    long long v = 0;
    try {
      size_t used = 0;
      v = std::stoll(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::invalid_argument("approx option '" + key + "' needs an integer");
    }
    if (v < 0) throw std::invalid_argument("approx option '" + key + "' must be >= 0");
    if (key == "top_m") c.top_m = static_cast<size_t>(v);
    else if (key == "tail") c.tail_samples = static_cast<size_t>(v);
    else if (key == "tables") c.tables = static_cast<int>(v);
    else if (key == "bits") c.bits = static_cast<int>(v);
    else if (key == "probe") c.probe_radius = static_cast<int>(v);
    else if (key == "audit") c.audit_rows = static_cast<size_t>(v);
    else throw std::invalid_argument("unknown approx option '" + key + "'");
  }
  ValidateApproxConfig(c);
  return c;
}

void ValidateApproxConfig(const ApproxConfig& c) {
  if (c.tail_samples < 1) throw std::invalid_argument("tail_samples must be >= 1");
  if (c.tables < 1) throw std::invalid_argument("tables must be >= 1");
  if (c.bits < 1 || c.bits > 32) throw std::invalid_argument("bits must lie in [1, 32]");
  if (c.probe_radius < 0) throw std::invalid_argument("probe radius must be >= 0");
}

NeighborIndex NeighborIndex::Build(Side side, Matrix keys, int tables, int bits,
                                   uint64_t seed) {
  if (keys.cols() == 0) throw DataError("neighbor index needs key dimension >= 1");
  if (keys.rows() == 0) throw DataError("neighbor index needs at least one key");
  if (tables < 1 || bits < 1 || bits > 32) {
    throw std::invalid_argument("index needs tables >= 1 and bits in [1, 32]");
  }
  NeighborIndex index;
  index.side_ = side;
  index.tables_ = tables;
  index.bits_ = bits;
  index.keys_ = std::move(keys);
  const size_t n = index.keys_.rows();
  const size_t dim = index.keys_.cols();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  index.planes_ = Matrix(static_cast<size_t>(tables) * bits, dim + 1);
  for (double& v : index.planes_.data()) v = gauss(rng);

  for (size_t i = 0; i < n; ++i) {
    const double norm = Norm(index.keys_.row(i));
    if (!std::isfinite(norm)) throw DataError("non-finite index key");
    index.max_norm_ = std::max(index.max_norm_, norm);
  }

  index.buckets_.assign(tables, {});
  index.key_codes_.assign(tables, std::vector<uint32_t>(n));
  std::vector<double> lifted(dim + 1);
  for (size_t i = 0; i < n; ++i) {
    const auto key = index.keys_.row(i);
    double sq = 0.0;
    for (size_t k = 0; k < dim; ++k) {
      lifted[k] = index.max_norm_ > 0.0 ? key[k] / index.max_norm_ : 0.0;
      sq += lifted[k] * lifted[k];
    }
    lifted[dim] = std::sqrt(std::max(0.0, 1.0 - sq));
    for (int t = 0; t < tables; ++t) {
      const uint32_t code = index.Hash(t, lifted);
      index.key_codes_[t][i] = code;
      index.buckets_[t].emplace_back(code, static_cast<uint32_t>(i));
    }
  }
  for (auto& table : index.buckets_) std::sort(table.begin(), table.end());
  return index;
}

uint32_t NeighborIndex::Hash(int table, std::span<const double> lifted) const {
  uint32_t code = 0;
  for (int b = 0; b < bits_; ++b) {
    const auto plane = planes_.row(static_cast<size_t>(table) * bits_ + b);
    double dot = 0.0;
    for (size_t k = 0; k < lifted.size(); ++k) dot += plane[k] * lifted[k];
    if (dot >= 0.0) code |= 1u << b;
  }
  return code;
}

std::vector<uint32_t> NeighborIndex::Bucket(int table, uint32_t code) const {
  const auto& t = buckets_.at(table);
  auto lo = std::lower_bound(t.begin(), t.end(), std::make_pair(code, uint32_t{0}));
  std::vector<uint32_t> out;
  for (; lo != t.end() && lo->first == code; ++lo) out.push_back(lo->second);
  return out;
}

std::vector<uint32_t> NeighborIndex::Probe(const std::vector<uint32_t>& codes,
                                           int probe_radius, size_t min_candidates) const {
  const size_t want = std::min(min_candidates, size());
  std::vector<uint32_t> found;
  std::vector<char> seen(size(), 0);
  auto collect = [&](int table, uint32_t code) {
    const auto& t = buckets_[table];
    auto lo = std::lower_bound(t.begin(), t.end(), std::make_pair(code, uint32_t{0}));
    for (; lo != t.end() && lo->first == code; ++lo) {
      if (!seen[lo->second]) {
        seen[lo->second] = 1;
        found.push_back(lo->second);
      }
    }
  };
  for (int radius = 0; radius <= bits_; ++radius) {
    for (int t = 0; t < tables_; ++t) {
      ForEachAtDistance(codes[t], bits_, radius, 0, [&](uint32_t c) { collect(t, c); });
    }
    if (radius >= probe_radius && found.size() >= want) break;
  }
  std::sort(found.begin(), found.end());
  return found;
}

std::vector<uint32_t> NeighborIndex::Query(std::span<const double> query, int probe_radius,
                                           size_t min_candidates) const {
  const size_t dim = keys_.cols();
  if (query.size() != dim) throw std::invalid_argument("query dimension mismatch");
  std::vector<double> lifted(dim + 1, 0.0);
  const double norm = Norm(query);
  for (size_t k = 0; k < dim; ++k) lifted[k] = norm > 0.0 ? query[k] / norm : 0.0;
  std::vector<uint32_t> codes(tables_);
  for (int t = 0; t < tables_; ++t) codes[t] = Hash(t, lifted);
  return Probe(codes, probe_radius, min_candidates);
}

std::vector<uint32_t> NeighborIndex::QueryKey(size_t user, int probe_radius,
                                              size_t min_candidates) const {
  std::vector<uint32_t> codes(tables_);
  for (int t = 0; t < tables_; ++t) codes[t] = key_codes_[t].at(user);
  return Probe(codes, probe_radius, min_candidates);
}

NeighborIndex BuildIndex(const FactorModel& model, Side side, const ApproxConfig& config) {
  if (model.d == 0) throw DataError("cannot index a model with d = 0");
  ValidateModel(model);
  const Matrix& factors = side == Side::kX ? model.u_x : model.v_y;
  const auto& bias = side == Side::kX ? model.bias_x : model.bias_y;
  Matrix keys(factors.rows(), model.d + 1);
  for (size_t i = 0; i < factors.rows(); ++i) {
    for (size_t k = 0; k < model.d; ++k) keys(i, k) = factors(i, k);
    keys(i, model.d) = bias[i];
  }
  return NeighborIndex::Build(side, std::move(keys), config.tables, config.bits, config.seed);
}

namespace {

Matrix Concat(const Matrix& a, const Matrix& b, const std::vector<double>* bias_a,
              const std::vector<double>* bias_b) {
  const size_t n = a.rows();
  Matrix out(n, a.cols() + b.cols() + 2);
  for (size_t i = 0; i < n; ++i) {
    size_t k = 0;
    for (double v : a.row(i)) out(i, k++) = v;
    for (double v : b.row(i)) out(i, k++) = v;
    out(i, k++) = bias_a ? (*bias_a)[i] : 1.0;
    out(i, k++) = bias_b ? (*bias_b)[i] : 1.0;
  }
  return out;
}

}  // namespace

Matrix JointKeys(const FactorModel& xy, const FactorModel& yx, Side side) {
  if (side == Side::kY) return Concat(xy.v_y, yx.v_y, &xy.bias_y, &yx.bias_y);
  return Concat(xy.u_x, yx.u_x, &xy.bias_x, &yx.bias_x);
}

Matrix JointQueries(const FactorModel& xy, const FactorModel& yx, Side side) {
  if (side == Side::kX) return Concat(xy.u_x, yx.u_x, nullptr, nullptr);
  return Concat(xy.v_y, yx.v_y, nullptr, nullptr);
}

RowSupport SelectRowSupport(const NeighborIndex& index, std::span<const double> query,
                            const std::function<double(size_t)>& weight,
                            const ApproxConfig& config, uint64_t stream) {
  const size_t n = index.size();
  RowSupport support;
  std::vector<uint32_t> head;
  if (config.top_m >= n) {
    head.resize(n);
    for (size_t i = 0; i < n; ++i) head[i] = static_cast<uint32_t>(i);
  } else if (config.top_m > 0) {
    const size_t want = config.min_candidates > 0 ? config.min_candidates : config.top_m;
    std::vector<uint32_t> candidates = index.Query(query, config.probe_radius, want);
    std::vector<std::pair<double, uint32_t>> scored;
    scored.reserve(candidates.size());
    for (uint32_t c : candidates) scored.emplace_back(-weight(c), c);
    const size_t keep = std::min(config.top_m, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + keep, scored.end());
    for (size_t i = 0; i < keep; ++i) head.push_back(scored[i].second);
    std::sort(head.begin(), head.end());
  }
  support.head_size = head.size();
  support.tail_size = n - head.size();

  std::vector<uint32_t> tail;
  double tail_multiplier = 1.0;
  const size_t tail_size = support.tail_size;
  if (tail_size > 0 && config.tail_samples >= tail_size) {
    tail.reserve(tail_size);
    size_t h = 0;
    for (uint32_t i = 0; i < n; ++i) {
      if (h < head.size() && head[h] == i) {
        ++h;
        continue;
      }
      tail.push_back(i);
    }
  } else if (tail_size > 0) {
    // Floyd's sampling of tail_samples distinct positions in the tail.
    std::mt19937_64 rng = SubstreamRng(config.seed, stream);
    std::unordered_set<size_t> chosen;
    std::vector<size_t> positions;
    const size_t s = config.tail_samples;
    for (size_t j = tail_size - s; j < tail_size; ++j) {
      std::uniform_int_distribution<size_t> pick(0, j);
      const size_t t = pick(rng);
      const size_t p = chosen.insert(t).second ? t : j;
      if (p == j) chosen.insert(j);
      positions.push_back(p);
    }
    tail.reserve(s);
    for (size_t p : positions) {
      // p-th element of the complement of the sorted head.
      size_t id = p;
      for (uint32_t hd : head) {
        if (hd <= id) ++id;
        else break;
      }
      tail.push_back(static_cast<uint32_t>(id));
    }
    std::sort(tail.begin(), tail.end());
    tail_multiplier = static_cast<double>(tail_size) / static_cast<double>(s);
  }
  const bool sampled = tail_multiplier != 1.0 || (tail_size > 0 && tail.size() < tail_size);

  support.index.reserve(head.size() + tail.size());
  support.multiplier.reserve(head.size() + tail.size());
  size_t a = 0, b = 0;
  while (a < head.size() || b < tail.size()) {
    if (b == tail.size() || (a < head.size() && head[a] < tail[b])) {
      support.index.push_back(head[a++]);
      support.multiplier.push_back(1.0);
    } else {
      if (sampled) support.sampled.push_back(static_cast<uint32_t>(support.index.size()));
      support.index.push_back(tail[b++]);
      support.multiplier.push_back(tail_multiplier);
    }
  }
  return support;
}

double ApproxRowSum(const NeighborIndex& index, std::span<const double> query,
                    const std::function<double(size_t)>& weight,
                    std::span<const double> sqrt_mu0, const ApproxConfig& config,
                    uint64_t stream) {
  if (sqrt_mu0.size() != index.size()) {
    throw std::invalid_argument("sqrt_mu0 length does not match the index");
  }
  const RowSupport support = SelectRowSupport(index, query, weight, config, stream);
  std::vector<double> w(support.index.size());
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] = support.multiplier[i] * weight(support.index[i]);
  }
  return LaneGatherDot(w, support.index, sqrt_mu0);
}

namespace {

// Flattened per-row supports with weights already multiplied in. Each row
// stores its exact part first and its sampled tail last.
struct SparseSums {
  std::vector<size_t> offset;
  std::vector<size_t> tail_begin;
  std::vector<uint32_t> index;
  std::vector<double> weight;
  std::vector<size_t> tail_size;
  mutable std::vector<double> row_variance;

  // Writes the sums into `out`; returns the mean estimated variance of the
  // sampled sums when `variance` is set.
  double Sums(std::span<const double> s, std::span<double> out, int threads,
              bool variance) const {
    const size_t rows = offset.size() - 1;
    if (variance) row_variance.assign(rows, 0.0);
    ParallelFor(rows, threads, [&](size_t begin, size_t end) {
      for (size_t r = begin; r < end; ++r) {
        const size_t lo = offset[r], mid = tail_begin[r], hi = offset[r + 1];
        const double head =
            LaneGatherDot({weight.data() + lo, mid - lo}, {index.data() + lo, mid - lo}, s);
        const double tail =
            LaneGatherDot({weight.data() + mid, hi - mid}, {index.data() + mid, hi - mid}, s);
        out[r] = head + tail;
        const size_t k = hi - mid;
        if (!variance || k < 2) continue;
        // Terms carry the multiplier N/k, so N^2 (1 - k/N) var(t) / k
        // becomes (1 - k/N) k var(multiplied term).
        const double kd = static_cast<double>(k);
        const double mean = tail / kd;
        double sq = 0.0;
        for (size_t i = mid; i < hi; ++i) {
          const double dev = weight[i] * s[index[i]] - mean;
          sq += dev * dev;
        }
        const double big_n = static_cast<double>(tail_size[r]);
        row_variance[r] = (1.0 - kd / big_n) * kd * sq / (kd - 1.0);
      }
    });
    if (!variance || rows == 0) return 0.0;
    double total = 0.0;
    for (double v : row_variance) total += v;
    return total / static_cast<double>(rows);
  }
};

SparseSums BuildSparseSums(const NeighborIndex& index, const Matrix& queries,
                           const std::function<double(size_t row, size_t col)>& weight,
                           const ApproxConfig& config, uint64_t stream_tag, int threads) {
  const size_t rows = queries.rows();
  std::vector<RowSupport> supports(rows);
  ParallelFor(rows, threads, [&](size_t begin, size_t end) {
    for (size_t r = begin; r < end; ++r) {
      supports[r] = SelectRowSupport(
          index, queries.row(r), [&](size_t c) { return weight(r, c); }, config,
          2 * static_cast<uint64_t>(r) + stream_tag);
    }
  });
  SparseSums sums;
  sums.offset.assign(rows + 1, 0);
  sums.tail_begin.assign(rows, 0);
  for (size_t r = 0; r < rows; ++r) {
    sums.offset[r + 1] = sums.offset[r] + supports[r].index.size();
    sums.tail_begin[r] = sums.offset[r + 1] - supports[r].sampled.size();
  }
  sums.index.resize(sums.offset[rows]);
  sums.weight.resize(sums.offset[rows]);
  sums.tail_size.assign(rows, 0);
  ParallelFor(rows, threads, [&](size_t begin, size_t end) {
    for (size_t r = begin; r < end; ++r) {
      auto& sp = supports[r];
      size_t exact_pos = sums.offset[r];
      size_t tail_pos = sums.tail_begin[r];
      size_t next_sampled = 0;
      for (size_t i = 0; i < sp.index.size(); ++i) {
        const bool is_sampled =
            next_sampled < sp.sampled.size() && sp.sampled[next_sampled] == i;
        size_t& pos = is_sampled ? tail_pos : exact_pos;
        if (is_sampled) ++next_sampled;
        sums.index[pos] = sp.index[i];
        sums.weight[pos] = sp.multiplier[i] * weight(r, sp.index[i]);
        ++pos;
      }
      sums.tail_size[r] = sp.tail_size;
      sp = RowSupport{};
    }
  });
  return sums;
}

}  // namespace

struct ApproxKernel::Impl {
  SparseSums rows;
  SparseSums cols;
  bool track_variance = false;
  int threads = 1;
};

ApproxKernel::ApproxKernel(const FactorModel& xy, const FactorModel& yx,
                           const ApproxConfig& aconfig, int threads)
    : impl_(std::make_unique<Impl>()) {
  ValidateModel(xy);
  ValidateModel(yx);
  ValidateApproxConfig(aconfig);
  if (xy.size_x() != yx.size_x() || xy.size_y() != yx.size_y()) {
    throw DataError("models cover different markets");
  }
  if (xy.direction != Direction::kXToY || yx.direction != Direction::kYToX) {
    throw DataError("approximate solver needs an x_to_y and a y_to_x model");
  }
  impl_->track_variance = aconfig.track_variance;
  impl_->threads = threads;
  {
    const NeighborIndex index_y = NeighborIndex::Build(
        Side::kY, JointKeys(xy, yx, Side::kY), aconfig.tables, aconfig.bits, aconfig.seed);
    impl_->rows = BuildSparseSums(
        index_y, JointQueries(xy, yx, Side::kX),
        [&](size_t x, size_t y) { return WeightFromModels(xy, yx, x, y); }, aconfig, 0,
        threads);
  }
  {
    const NeighborIndex index_x = NeighborIndex::Build(
        Side::kX, JointKeys(xy, yx, Side::kX), aconfig.tables, aconfig.bits,
        aconfig.seed + 1);
    impl_->cols = BuildSparseSums(
        index_x, JointQueries(xy, yx, Side::kY),
        [&](size_t y, size_t x) { return WeightFromModels(xy, yx, x, y); }, aconfig, 1,
        threads);
  }
}

ApproxKernel::~ApproxKernel() = default;
ApproxKernel::ApproxKernel(ApproxKernel&&) noexcept = default;

IpfpSums ApproxKernel::Sums(ApproxReport* report) const {
  const Impl* impl = impl_.get();
  const bool track = impl->track_variance && report != nullptr;
  IpfpSums sums;
  sums.row_sums = [impl, track, report](std::span<const double> s_y, std::span<double> b) {
    const double var = impl->rows.Sums(s_y, b, impl->threads, track);
    if (track) report->row_sum_variance.push_back(var);
  };
  sums.col_sums = [impl, track, report](std::span<const double> s_x, std::span<double> c) {
    const double var = impl->cols.Sums(s_x, c, impl->threads, track);
    if (track) report->col_sum_variance.push_back(var);
  };
  return sums;
}

size_t ApproxKernel::entries() const {
  return impl_->rows.index.size() + impl_->cols.index.size();
}

ApproxEquilibrium SolveIpfpApprox(const FactorModel& xy, const FactorModel& yx,
                                  const SolverConfig& config, const ApproxConfig& aconfig) {
  ValidateSolverConfig(config);
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const ApproxKernel kernel(xy, yx, aconfig, config.threads);
  const size_t nx = xy.size_x(), ny = xy.size_y();

  ApproxEquilibrium result;
  const IpfpSums sums = kernel.Sums(&result.report);
  const auto t1 = Clock::now();
  IpfpIterate it = RunIpfp(nx, ny, config, sums);
  const auto t2 = Clock::now();
  result.setup_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  result.solve_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();

  result.mu_x0.resize(nx);
  result.mu_y0.resize(ny);
  for (size_t x = 0; x < nx; ++x) result.mu_x0[x] = it.sqrt_mu_x0[x] * it.sqrt_mu_x0[x];
  for (size_t y = 0; y < ny; ++y) result.mu_y0[y] = it.sqrt_mu_y0[y] * it.sqrt_mu_y0[y];
  result.residual = it.residual;
  result.sweeps = it.sweeps;
  result.converged = it.converged;

  // Exact marginals on a random audit subset.
  std::mt19937_64 rng = SubstreamRng(aconfig.seed, 0xA0D17ULL);
  auto audit_set = [&](size_t n) {
    std::vector<size_t> all(n);
    for (size_t i = 0; i < n; ++i) all[i] = i;
    const size_t k = std::min(aconfig.audit_rows, n);
    for (size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<size_t> pick(i, n - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    all.resize(k);
    return all;
  };
  double audit = 0.0;
  const auto audit_rows = audit_set(nx);
  for (size_t x : audit_rows) {
    double row = 0.0;
    for (size_t y = 0; y < ny; ++y) row += WeightFromModels(xy, yx, x, y) * it.sqrt_mu_y0[y];
    row = row * it.sqrt_mu_x0[x] + result.mu_x0[x];
    audit = std::max(audit, std::abs(row - 1.0));
  }
  const auto audit_cols = audit_set(ny);
  for (size_t y : audit_cols) {
    double col = 0.0;
    for (size_t x = 0; x < nx; ++x) col += WeightFromModels(xy, yx, x, y) * it.sqrt_mu_x0[x];
    col = col * it.sqrt_mu_y0[y] + result.mu_y0[y];
    audit = std::max(audit, std::abs(col - 1.0));
  }
  result.report.audit_residual = audit;
  result.report.rows_audited = audit_rows.size();
  result.report.cols_audited = audit_cols.size();
  return result;
}

EquilibriumMatching MaterializeMatching(const ApproxEquilibrium& approx,
                                        const FactorModel& xy, const FactorModel& yx) {
  const size_t nx = approx.mu_x0.size(), ny = approx.mu_y0.size();
  if (xy.size_x() != nx || xy.size_y() != ny) {
    throw DataError("models do not match the approximate equilibrium");
  }
  EquilibriumMatching m;
  m.mu = Matrix(nx, ny);
  m.mu_x0 = approx.mu_x0;
  m.mu_y0 = approx.mu_y0;
  for (size_t x = 0; x < nx; ++x) {
    const double sx = std::sqrt(m.mu_x0[x]);
    for (size_t y = 0; y < ny; ++y) {
      m.mu(x, y) = WeightFromModels(xy, yx, x, y) * sx * std::sqrt(m.mu_y0[y]);
    }
  }
  m.iterations = approx.sweeps;
  m.converged = approx.converged;
  m.residual = Residual(m);
  return m;
}

}  // namespace tumatch
