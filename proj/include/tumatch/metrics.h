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

#include <span>

namespace tumatch {

// Population Gini coefficient, sum_i sum_j |v_i - v_j| / (2 n^2 mean).
// Throws std::invalid_argument for empty input, negative entries, or an
// all-zero vector.
double Gini(std::span<const double> values);

// Spearman rank correlation with average ranks for ties.
double SpearmanCorrelation(std::span<const double> a, std::span<const double> b);

}  // namespace tumatch
