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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tumatch/common.h"

namespace tumatch {

enum class Action : uint8_t { kLike, kNope, kThank, kSorry };

const char* ActionName(Action action);
// Throws DataError for anything other than like/nope/thank/sorry.
Action ParseAction(std::string_view token);
inline bool IsPositive(Action action) {
  return action == Action::kLike || action == Action::kThank;
}

struct FeedbackEvent {
  std::string sender;
  std::string receiver;
  Action action = Action::kLike;
  int64_t timestamp = 0;

  bool operator==(const FeedbackEvent&) const = default;
};

// Position of a user inside the market.
struct UserRef {
  Side side;
  uint32_t index;
};

// Two disjoint, duplicate-free sides plus the feedback log. Immutable once
// constructed; the constructor validates every invariant.
class Market {
 public:
  Market(std::vector<std::string> men, std::vector<std::string> women,
         std::vector<FeedbackEvent> feedback);

  const std::vector<std::string>& men() const { return men_; }
  const std::vector<std::string>& women() const { return women_; }
  const std::vector<std::string>& ids(Side side) const {
    return side == Side::kX ? men_ : women_;
  }
  const std::vector<FeedbackEvent>& feedback() const { return feedback_; }
  size_t size_x() const { return men_.size(); }
  size_t size_y() const { return women_.size(); }

  std::optional<UserRef> Find(std::string_view id) const;
  // Throws DataError for unknown IDs.
  UserRef Lookup(std::string_view id) const;

 private:
  std::vector<std::string> men_;
  std::vector<std::string> women_;
  std::vector<FeedbackEvent> feedback_;
  std::unordered_map<std::string, UserRef> index_;
};

enum class FeedbackFormat { kCsv, kJsonl };

// Loads `sender,receiver,action,timestamp` rows (CSV with header, or JSONL
// objects with the same keys). Sides come from the roster file
// (`user_id,side`, side in {X,Y}) when given; otherwise every row must carry a
// `sender_side` field. Events are stably sorted by timestamp.
Market LoadFeedback(const std::string& path, FeedbackFormat format,
                    const std::string& roster_path = "");
Market LoadMarket(const std::string& feedback_path,
                  const std::string& roster_path);

// Roster only, no events.
Market LoadRoster(const std::string& roster_path);

void SaveRoster(const Market& market, const std::string& path);
void SaveFeedbackCsv(const Market& market, const std::string& path);

// Unilateral preference scores, both indexed (x, y).
struct ScoreMatrix {
  Matrix p_xy;
  Matrix p_yx;

  size_t size_x() const { return p_xy.rows(); }
  size_t size_y() const { return p_xy.cols(); }
};

// Throws DataError unless shapes agree and every entry lies in [0, 1].
void ValidateScores(const ScoreMatrix& scores);

struct EquilibriumMatching {
  Matrix mu;
  std::vector<double> mu_x0;
  std::vector<double> mu_y0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct Transfers {
  Matrix tau;
};

}  // namespace tumatch
