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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tumatch {

// Malformed or inconsistent input data (files, IDs, shapes).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf produced inside a numerical routine.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Side : uint8_t { kX = 0, kY = 1 };

inline Side Opposite(Side side) { return side == Side::kX ? Side::kY : Side::kX; }
inline const char* SideName(Side side) { return side == Side::kX ? "X" : "Y"; }

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// Runs body(begin, end) over a static partition of [0, n). Partition
// boundaries depend on `threads`, so callers must keep per-index work
// independent of the partition to stay reproducible.
template <typename Body>
void ParallelFor(size_t n, int threads, Body&& body) {
  const size_t workers =
      std::min<size_t>(n, static_cast<size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    body(size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  const size_t chunk = (n + workers - 1) / workers;
  for (size_t w = 1; w < workers; ++w) {
    const size_t begin = std::min(n, w * chunk);
    const size_t end = std::min(n, begin + chunk);
    if (begin < end) pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(size_t{0}, std::min(n, chunk));
}

// Four-lane dot product: element i accumulates into lane i % 4 and the lanes
// combine as (l0 + l1) + (l2 + l3). Every sum in the solvers goes through this
// pattern so exact and approximate paths agree bit for bit on identical input.
inline double LaneDot(std::span<const double> a, std::span<const double> b) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const size_t n = a.size();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lane[0] += a[i] * b[i];
    lane[1] += a[i + 1] * b[i + 1];
    lane[2] += a[i + 2] * b[i + 2];
    lane[3] += a[i + 3] * b[i + 3];
  }
  for (size_t l = 0; i < n; ++i, ++l) lane[l] += a[i] * b[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

// LaneDot over weights[i] * values[index[i]].
inline double LaneGatherDot(std::span<const double> weights,
                            std::span<const uint32_t> index,
                            std::span<const double> values) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const size_t n = weights.size();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lane[0] += weights[i] * values[index[i]];
    lane[1] += weights[i + 1] * values[index[i + 1]];
    lane[2] += weights[i + 2] * values[index[i + 2]];
    lane[3] += weights[i + 3] * values[index[i + 3]];
  }
  for (size_t l = 0; i < n; ++i, ++l) lane[l] += weights[i] * values[index[i]];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace tumatch
