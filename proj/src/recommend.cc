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

#include "tumatch/recommend.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "tumatch/metrics.h"

namespace tumatch {

RankingMode ParseRankingMode(const std::string& text) {
  if (text == "fusion") return RankingMode::kFusion;
  if (text == "mtrs") return RankingMode::kMtrs;
  if (text == "transfer") return RankingMode::kTransfer;
  throw std::invalid_argument("unknown ranking mode '" + text + "'");
}

Matrix TransferUtility(const ScoreMatrix& scores, const Transfers& transfers, Side side) {
  Matrix out(scores.size_x(), scores.size_y());
  for (size_t x = 0; x < out.rows(); ++x) {
    for (size_t y = 0; y < out.cols(); ++y) {
      out(x, y) = side == Side::kX ? scores.p_xy(x, y) - transfers.tau(x, y)
                                   : scores.p_yx(x, y) + transfers.tau(x, y);
    }
  }
  return out;
}

namespace {

RecommendationList RankFor(const Matrix& ranking, const Market& market, UserRef ref,
                           size_t k) {
  const auto& pool = market.ids(Opposite(ref.side));
  std::vector<uint32_t> order(pool.size());
  for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  auto score = [&](uint32_t c) {
    return ref.side == Side::kX ? ranking(ref.index, c) : ranking(c, ref.index);
  };
  auto better = [&](uint32_t a, uint32_t b) {
    const double sa = score(a), sb = score(b);
    if (sa != sb) return sa > sb;
    return pool[a] < pool[b];
  };
  const size_t keep = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + keep, order.end(), better);
  RecommendationList list;
  list.user = market.ids(ref.side)[ref.index];
  list.k = k;
  for (size_t i = 0; i < keep; ++i) list.ranked.emplace_back(pool[order[i]], score(order[i]));
  return list;
}

void CheckShape(const Matrix& ranking, const Market& market) {
  if (ranking.rows() != market.size_x() || ranking.cols() != market.size_y()) {
    throw DataError("ranking matrix does not match the market shape");
  }
}

}  // namespace

RecommendationList RecommendTopK(const Matrix& ranking, const Market& market,
                                 const std::string& user, size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  CheckShape(ranking, market);
  return RankFor(ranking, market, market.Lookup(user), k);
}

std::vector<RecommendationList> RecommendAll(const Matrix& ranking, const Market& market,
                                             Side side, size_t k, int threads) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  CheckShape(ranking, market);
  const size_t n = market.ids(side).size();
  std::vector<RecommendationList> lists(n);
  ParallelFor(n, threads, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      lists[i] = RankFor(ranking, market, UserRef{side, static_cast<uint32_t>(i)}, k);
    }
  });
  return lists;
}

ExposureReport ExposureMetrics(const std::vector<RecommendationList>& lists,
                               const std::vector<std::string>& pool,
                               const EquilibriumMatching* matching) {
  if (lists.empty() || pool.empty()) {
    throw std::invalid_argument("exposure metrics need lists and a candidate pool");
  }
  ExposureReport report;
  report.candidates = pool;
  report.exposure.assign(pool.size(), 0.0);
  std::unordered_map<std::string, size_t> slot;
  for (size_t i = 0; i < pool.size(); ++i) slot.emplace(pool[i], i);
  for (const auto& list : lists) {
    for (const auto& [candidate, score] : list.ranked) {
      auto it = slot.find(candidate);
      if (it == slot.end()) {
        throw std::invalid_argument("candidate '" + candidate + "' not in the pool");
      }
      report.exposure[it->second] += 1.0;
    }
  }
  report.gini = Gini(report.exposure);
  if (matching != nullptr) {
    double mass = 0.0;
    for (double v : matching->mu.data()) mass += v;
    report.expected_match_mass = mass;
  }
  return report;
}

void WriteRecommendationsCsv(const std::vector<RecommendationList>& lists,
                             const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot write " + path);
  std::fputs("user_id,rank,candidate_id,score\n", f);
  for (const auto& list : lists) {
    for (size_t r = 0; r < list.ranked.size(); ++r) {
      std::fprintf(f, "%s,%zu,%s,%.17g\n", list.user.c_str(), r + 1,
                   list.ranked[r].first.c_str(), list.ranked[r].second);
    }
  }
  std::fclose(f);
}

std::vector<RecommendationList> ReadRecommendationsCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("user_id,rank,candidate_id,score", 0) != 0) {
    throw DataError(path + ":1: expected header user_id,rank,candidate_id,score");
  }
  std::vector<RecommendationList> lists;
  std::unordered_map<std::string, size_t> by_user;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string user, rank, candidate, score;
    if (!std::getline(ss, user, ',') || !std::getline(ss, rank, ',') ||
        !std::getline(ss, candidate, ',') || !std::getline(ss, score)) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 fields");
    }
    double value = 0.0;
    try {
      value = std::stod(score);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad score '" + score + "'");
    }
    auto [it, inserted] = by_user.emplace(user, lists.size());
    if (inserted) lists.push_back(RecommendationList{user, {}, 0});
    auto& list = lists[it->second];
    list.ranked.emplace_back(candidate, value);
    list.k = list.ranked.size();
  }
  return lists;
}

}  // namespace tumatch
