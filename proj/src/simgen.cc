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

#include "tumatch/simgen.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace tumatch {
namespace {

std::vector<std::string> MakeIds(char prefix, size_t n) {
  const size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  std::vector<std::string> ids(n);
  for (size_t i = 0; i < n; ++i) {
    std::string num = std::to_string(i);
    ids[i] = std::string(1, prefix) + std::string(width - num.size(), '0') + num;
  }
  return ids;
}

std::vector<double> PopularityOffsets(size_t n, double skew, std::mt19937_64& rng) {
  std::vector<size_t> rank(n);
  std::iota(rank.begin(), rank.end(), size_t{1});
  std::shuffle(rank.begin(), rank.end(), rng);
  // Attractiveness rank^-skew, rescaled to mean 1 and applied as a log-odds offset.
  double total = 0.0;
  for (size_t r = 1; r <= n; ++r) total += std::pow(static_cast<double>(r), -skew);
  const double shift = std::log(static_cast<double>(n) / total);
  std::vector<double> offset(n);
  for (size_t i = 0; i < n; ++i) {
    offset[i] = shift - skew * std::log(static_cast<double>(rank[i]));
  }
  return offset;
}

// Distinct uniform picks from [0, n), in draw order.
std::vector<uint32_t> SampleDistinct(size_t n, size_t k, std::mt19937_64& rng) {
  std::unordered_set<size_t> chosen;
  std::vector<uint32_t> out;
  out.reserve(k);
  for (size_t j = n - k; j < n; ++j) {
    std::uniform_int_distribution<size_t> pick(0, j);
    size_t t = pick(rng);
    if (!chosen.insert(t).second) {
      t = j;
      chosen.insert(j);
    }
    out.push_back(static_cast<uint32_t>(t));
  }
  return out;
}

}  // namespace

SimulatedMarket GenerateMarket(const SimConfig& c) {
  if (c.n_x < 1 || c.n_y < 1) throw std::invalid_argument("simgen needs n_x, n_y >= 1");
  if (c.d_true < 1) throw std::invalid_argument("simgen needs d_true >= 1");
  if (c.popularity_skew < 0.0) throw std::invalid_argument("popularity_skew must be >= 0");
  if (!(c.events_per_user > 0.0)) throw std::invalid_argument("events_per_user must be > 0");

  std::mt19937_64 rng(c.seed);
  const double sd = std::sqrt(c.factor_scale / std::sqrt(static_cast<double>(c.d_true)));
  std::normal_distribution<double> gauss(0.0, sd);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto random_factors = [&](size_t n) {
    Matrix m(n, c.d_true);
    for (double& v : m.data()) v = gauss(rng);
    return m;
  };
  FactorModel xy, yx;
  xy.direction = Direction::kXToY;
  yx.direction = Direction::kYToX;
  xy.d = yx.d = c.d_true;
  xy.u_x = random_factors(c.n_x);  // x's taste
  xy.v_y = random_factors(c.n_y);  // y's traits
  yx.u_x = random_factors(c.n_x);  // x's traits
  yx.v_y = random_factors(c.n_y);  // y's taste
  std::vector<double> attract_x = PopularityOffsets(c.n_x, c.popularity_skew, rng);
  std::vector<double> attract_y = PopularityOffsets(c.n_y, c.popularity_skew, rng);
  xy.bias_x.assign(c.n_x, c.base_logit);
  xy.bias_y = attract_y;
  yx.bias_x = attract_x;
  yx.bias_y.assign(c.n_y, c.base_logit);

  ScoreMatrix truth = BuildScoreMatrix(xy, yx);

  const auto men = MakeIds('m', c.n_x);
  const auto women = MakeIds('w', c.n_y);
  std::vector<FeedbackEvent> events;
  int64_t clock = 0;
  const double whole = std::floor(c.events_per_user);
  const double frac = c.events_per_user - whole;

  // Senders on `side` swipe; replies come from the other side.
  auto swipe = [&](Side side) {
    const size_t senders = side == Side::kX ? c.n_x : c.n_y;
    const size_t pool = side == Side::kX ? c.n_y : c.n_x;
    for (size_t s = 0; s < senders; ++s) {
      size_t count = static_cast<size_t>(whole) + (unit(rng) < frac ? 1 : 0);
      count = std::min(count, pool);
      for (uint32_t r : SampleDistinct(pool, count, rng)) {
        const size_t x = side == Side::kX ? s : r;
        const size_t y = side == Side::kX ? r : s;
        const double p_send = side == Side::kX ? truth.p_xy(x, y) : truth.p_yx(x, y);
        const double p_reply = side == Side::kX ? truth.p_yx(x, y) : truth.p_xy(x, y);
        const std::string& sender = side == Side::kX ? men[x] : women[y];
        const std::string& receiver = side == Side::kX ? women[y] : men[x];
        if (unit(rng) < p_send) {
          events.push_back({sender, receiver, Action::kLike, clock++});
          const Action reply = unit(rng) < p_reply ? Action::kThank : Action::kSorry;
          events.push_back({receiver, sender, reply, clock++});
        } else {
          events.push_back({sender, receiver, Action::kNope, clock++});
        }
      }
    }
  };
  swipe(Side::kX);
  swipe(Side::kY);

  return SimulatedMarket{Market(men, women, std::move(events)), std::move(truth),
                         std::move(xy), std::move(yx), std::move(attract_x),
                         std::move(attract_y)};
}

std::vector<double> LikeInDegree(const Market& market, Side side) {
  std::vector<double> degree(side == Side::kX ? market.size_x() : market.size_y(), 0.0);
  for (const auto& e : market.feedback()) {
    if (e.action != Action::kLike) continue;
    const UserRef r = market.Lookup(e.receiver);
    if (r.side == side) degree[r.index] += 1.0;
  }
  return degree;
}

}  // namespace tumatch
