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
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "tumatch/equilibrium.h"
#include "tumatch/mf.h"

namespace tumatch {

struct ApproxConfig {
  size_t top_m = 64;          // exact head size
  size_t tail_samples = 256;  // uniform tail sample size, >= 1
  int tables = 8;             // L
  int bits = 10;              // k, hyperplanes per table
  int probe_radius = 1;       // Hamming radius probed around the query code
  // Probing widens until this many candidates are found; 0 means top_m.
  size_t min_candidates = 0;
  size_t audit_rows = 32;     // rows and columns audited with exact sums
  bool track_variance = true;  // per-sweep variance of the sampled sums
  uint64_t seed = 0;

  // "top_m=<int>,tail=<int>,tables=<int>,bits=<int>" (any subset, plus
  // probe=<int>, audit=<int>), applied on top of `base`.
  static ApproxConfig Parse(std::string_view text, ApproxConfig base);
  static ApproxConfig Parse(std::string_view text) { return Parse(text, ApproxConfig{}); }
};

void ValidateApproxConfig(const ApproxConfig& config);

// Signed-random-projection LSH over inner-product keys. Keys are scaled by the
// largest key norm and lifted with sqrt(1 - |k|^2) so that hyperplane
// collisions follow inner product; queries are normalized and lifted with 0.
class NeighborIndex {
 public:
  static NeighborIndex Build(Side side, Matrix keys, int tables, int bits, uint64_t seed);

  Side side() const { return side_; }
  size_t size() const { return keys_.rows(); }
  int tables() const { return tables_; }
  int bits() const { return bits_; }
  const Matrix& keys() const { return keys_; }

  uint32_t KeyCode(int table, size_t user) const { return key_codes_[table][user]; }
  // Sorted member IDs of a bucket.
  std::vector<uint32_t> Bucket(int table, uint32_t code) const;

  // Sorted, duplicate-free candidates from every bucket within `probe_radius`
  // of the query code in each table; the radius widens until at least
  // min(min_candidates, size()) candidates are found.
  std::vector<uint32_t> Query(std::span<const double> query, int probe_radius,
                              size_t min_candidates) const;
  // Same, hashing an indexed user's own key.
  std::vector<uint32_t> QueryKey(size_t user, int probe_radius,
                                 size_t min_candidates) const;

 private:
  uint32_t Hash(int table, std::span<const double> lifted) const;
  std::vector<uint32_t> Probe(const std::vector<uint32_t>& codes, int probe_radius,
                              size_t min_candidates) const;

  Side side_ = Side::kY;
  int tables_ = 0;
  int bits_ = 0;
  Matrix keys_;
  Matrix planes_;  // (tables * bits) x (dim + 1)
  double max_norm_ = 0.0;
  // Per table: (code, id) sorted by code then id.
  std::vector<std::vector<std::pair<uint32_t, uint32_t>>> buckets_;
  std::vector<std::vector<uint32_t>> key_codes_;
};

// Keys [v_y, bias_y] (side Y) or [u_x, bias_x] (side X) from one model.
NeighborIndex BuildIndex(const FactorModel& model, Side side, const ApproxConfig& config);

// Keys and queries whose inner product is the sum of both directions' raw
// affinities up to a per-query constant: keys of side Y are
// [v_y^xy, v_y^yx, bias_y^xy, bias_y^yx], queries of side X
// [u_x^xy, u_x^yx, 1, 1], and symmetrically for side X keys.
Matrix JointKeys(const FactorModel& model_xy, const FactorModel& model_yx, Side side);
Matrix JointQueries(const FactorModel& model_xy, const FactorModel& model_yx, Side side);

// Support of one approximate row sum: head entries carry multiplier 1, sampled
// tail entries |tail| / tail_samples. Sorted by index.
struct RowSupport {
  std::vector<uint32_t> index;
  std::vector<double> multiplier;
  std::vector<uint32_t> sampled;  // positions in `index` that are tail samples
  size_t head_size = 0;
  size_t tail_size = 0;
};

// Head = top_m candidates by exact weight (ties to lower index); tail sample
// drawn without replacement from a substream of (config.seed, stream).
RowSupport SelectRowSupport(const NeighborIndex& index, std::span<const double> query,
                            const std::function<double(size_t)>& weight,
                            const ApproxConfig& config, uint64_t stream);

// Estimate of sum_j weight(j) sqrt_mu0[j]: exact over the head, scaled
// uniform sample over the rest. Degrades to the exact tail sum when
// tail_samples covers the tail.
double ApproxRowSum(const NeighborIndex& index, std::span<const double> query,
                    const std::function<double(size_t)>& weight,
                    std::span<const double> sqrt_mu0, const ApproxConfig& config,
                    uint64_t stream);

struct ApproxReport {
  double audit_residual = 0.0;  // exact marginal violation on audited rows/cols
  size_t rows_audited = 0;
  size_t cols_audited = 0;
  // Mean estimated variance of the sampled row (col) sums, per row (col) pass.
  std::vector<double> row_sum_variance;
  std::vector<double> col_sum_variance;
};

// Sparse head-plus-tail supports for both sides, built once and reusable
// across IPFP runs.
class ApproxKernel {
 public:
  ApproxKernel(const FactorModel& model_xy, const FactorModel& model_yx,
               const ApproxConfig& aconfig, int threads = 1);
  ~ApproxKernel();
  ApproxKernel(ApproxKernel&&) noexcept;

  // Per-sweep variance estimates are appended to `report` when tracking is
  // on and `report` is non-null. The kernel must outlive the returned sums.
  IpfpSums Sums(ApproxReport* report = nullptr) const;
  size_t entries() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ApproxEquilibrium {
  std::vector<double> mu_x0;
  std::vector<double> mu_y0;
  double residual = 0.0;  // on the approximate sums
  int sweeps = 0;
  bool converged = false;
  double setup_ms = 0.0;  // index build and support selection
  double solve_ms = 0.0;  // IPFP sweeps only
  ApproxReport report;
};

// IPFP with approximate row and column sums. Weights are scored from the
// factors and only the per-row supports are stored, never a |X| x |Y| buffer.
ApproxEquilibrium SolveIpfpApprox(const FactorModel& model_xy, const FactorModel& model_yx,
                                  const SolverConfig& config, const ApproxConfig& aconfig);

// Dense mu from the approximate singles probabilities. O(|X||Y|) by design.
EquilibriumMatching MaterializeMatching(const ApproxEquilibrium& approx,
                                        const FactorModel& model_xy,
                                        const FactorModel& model_yx);

}  // namespace tumatch
