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
#include <string>
#include <utility>
#include <vector>

#include "tumatch/fusion.h"
#include "tumatch/market.h"

namespace tumatch {

struct RecommendationList {
  std::string user;
  // Score descending; ties by ascending candidate id.
  std::vector<std::pair<std::string, double>> ranked;
  size_t k = 0;
};

enum class RankingMode {
  kFusion,    // fused p_{x<->y}
  kMtrs,      // equilibrium mu_xy
  kTransfer,  // p_xy - tau for X users, p_yx + tau for Y users
};

RankingMode ParseRankingMode(const std::string& text);

// Utility net of transfers from `side`'s point of view, indexed (x, y).
Matrix TransferUtility(const ScoreMatrix& scores, const Transfers& transfers, Side side);

// Top-k candidates from the opposite side for `user`, ranked by `ranking`
// (indexed (x, y)). Throws DataError for unknown users, std::invalid_argument
// for k < 1.
RecommendationList RecommendTopK(const Matrix& ranking, const Market& market,
                                 const std::string& user, size_t k);

// One list per user of `side`, in roster order.
std::vector<RecommendationList> RecommendAll(const Matrix& ranking, const Market& market,
                                             Side side, size_t k, int threads = 1);

struct ExposureReport {
  std::vector<std::string> candidates;
  std::vector<double> exposure;  // appearances in top-k lists, per candidate
  double gini = 0.0;
  std::optional<double> expected_match_mass;  // sum of mu when a matching is given
};

// `pool` lists every candidate of the recommended side, including those never
// shown. Throws std::invalid_argument on empty input or unknown candidates.
ExposureReport ExposureMetrics(const std::vector<RecommendationList>& lists,
                               const std::vector<std::string>& pool,
                               const EquilibriumMatching* matching = nullptr);

// user_id,rank,candidate_id,score (rank is 1-based).
void WriteRecommendationsCsv(const std::vector<RecommendationList>& lists,
                             const std::string& path);
std::vector<RecommendationList> ReadRecommendationsCsv(const std::string& path);

}  // namespace tumatch
