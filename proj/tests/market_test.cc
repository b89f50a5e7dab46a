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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tumatch/market.h"
#include "tumatch/metrics.h"

namespace tumatch {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("tumatch_market_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string File(const std::string& name, const std::string& body) const {
    const std::string p = (path_ / name).string();
    std::ofstream(p) << body;
    return p;
  }
  std::string Path(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

constexpr char kRoster[] = "user_id,side\nm1,X\nm2,X\nw1,Y\nw2,Y\n";

TEST(LoadFeedback, FourRowCsv) {
  TempDir dir;
  const auto roster = dir.File("roster.csv", kRoster);
  const auto fb = dir.File("fb.csv",
                           "sender,receiver,action,timestamp\n"
                           "m1,w1,like,1\n"
                           "m2,w1,like,2\n"
                           "w2,m1,like,3\n"
                           "w1,m1,thank,4\n");
  const Market m = LoadFeedback(fb, FeedbackFormat::kCsv, roster);
  EXPECT_EQ(m.size_x(), 2u);
  EXPECT_EQ(m.size_y(), 2u);
  EXPECT_EQ(m.feedback().size(), 4u);
  EXPECT_EQ(m.feedback()[3].action, Action::kThank);
}

TEST(LoadFeedback, EmptyFileWithRoster) {
  TempDir dir;
  const auto roster = dir.File("roster.csv", "user_id,side\nm1,X\nw1,Y\n");
  const auto fb = dir.File("fb.csv", "sender,receiver,action,timestamp\n");
  const Market m = LoadFeedback(fb, FeedbackFormat::kCsv, roster);
  EXPECT_EQ(m.size_x(), 1u);
  EXPECT_EQ(m.size_y(), 1u);
  EXPECT_TRUE(m.feedback().empty());
}

TEST(LoadFeedback, UnknownActionNamesLineAndToken) {
  TempDir dir;
  const auto roster = dir.File("roster.csv", kRoster);
  const auto fb = dir.File("fb.csv",
                           "sender,receiver,action,timestamp\n"
                           "m1,w1,like,1\n"
                           "m2,w2,super-like,2\n");
  try {
    LoadFeedback(fb, FeedbackFormat::kCsv, roster);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(":3:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("super-like"), std::string::npos) << msg;
  }
}

TEST(LoadFeedback, Jsonl) {
  TempDir dir;
  const auto roster = dir.File("roster.csv", kRoster);
  const auto fb = dir.File(
      "fb.jsonl",
      "{\"sender\":\"m1\",\"receiver\":\"w2\",\"action\":\"nope\",\"timestamp\":5}\n"
      "{\"sender\":\"w2\",\"receiver\":\"m2\",\"action\":\"sorry\",\"timestamp\":6}\n");
  const Market m = LoadFeedback(fb, FeedbackFormat::kJsonl, roster);
  ASSERT_EQ(m.feedback().size(), 2u);
  EXPECT_EQ(m.feedback()[0].action, Action::kNope);
  EXPECT_EQ(m.feedback()[1].action, Action::kSorry);
}

TEST(LoadFeedback, SenderSideWithoutRoster) {
  TempDir dir;
  const auto fb = dir.File("fb.csv",
                           "sender,receiver,action,timestamp,sender_side\n"
                           "a,b,like,1,X\n"
                           "b,a,thank,2,Y\n"
                           "c,b,nope,3,X\n");
  const Market m = LoadFeedback(fb, FeedbackFormat::kCsv);
  EXPECT_EQ(m.size_x(), 2u);
  EXPECT_EQ(m.size_y(), 1u);
}

TEST(LoadFeedback, Rejections) {
  TempDir dir;
  const auto roster = dir.File("roster.csv", kRoster);
  const std::string header = "sender,receiver,action,timestamp\n";
  for (const std::string row : {"m1,m2,like,1\n", "m1,w9,like,1\n", "m1,w1,like,-3\n",
                                "m1,w1,like,abc\n", "m1,w1,like\n", ",w1,like,1\n"}) {
    const auto fb = dir.File("bad.csv", header + row);
    EXPECT_THROW(LoadFeedback(fb, FeedbackFormat::kCsv, roster), DataError) << row;
  }
  EXPECT_THROW(LoadFeedback(dir.Path("missing.csv"), FeedbackFormat::kCsv, roster), DataError);
  const auto bad_json = dir.File("bad.jsonl", "{\"sender\":\"m1\"}\n");
  EXPECT_THROW(LoadFeedback(bad_json, FeedbackFormat::kJsonl, roster), DataError);
}

TEST(Market, RejectsDuplicatesAndEmptySides) {
  EXPECT_THROW(Market({"a", "a"}, {"b"}, {}), DataError);
  EXPECT_THROW(Market({"a"}, {"a"}, {}), DataError);
  EXPECT_THROW(Market({}, {"b"}, {}), DataError);
  EXPECT_THROW(Market({"a"}, {"b"}, {{"a", "a", Action::kLike, 0}}), DataError);
}

TEST(Market, EventsOrderedByTimestamp) {
  TempDir dir;
  const auto roster = dir.File("roster.csv", kRoster);
  const auto fb = dir.File("fb.csv",
                           "sender,receiver,action,timestamp\n"
                           "m1,w1,like,9\n"
                           "m2,w1,like,2\n"
                           "w2,m1,like,2\n");
  const Market m = LoadFeedback(fb, FeedbackFormat::kCsv, roster);
  ASSERT_EQ(m.feedback().size(), 3u);
  EXPECT_EQ(m.feedback()[0].sender, "m2");
  EXPECT_EQ(m.feedback()[1].sender, "w2");
  EXPECT_EQ(m.feedback()[2].timestamp, 9);
}

TEST(Market, RoundTrip) {
  TempDir dir;
  std::vector<FeedbackEvent> events = {{"m1", "w2", Action::kLike, 1},
                                       {"w2", "m1", Action::kThank, 2},
                                       {"w1", "m2", Action::kNope, 3},
                                       {"m2", "w1", Action::kSorry, 3}};
  const Market original({"m1", "m2"}, {"w1", "w2"}, events);
  SaveRoster(original, dir.Path("roster.csv"));
  SaveFeedbackCsv(original, dir.Path("fb.csv"));
  const Market loaded = LoadMarket(dir.Path("fb.csv"), dir.Path("roster.csv"));
  EXPECT_EQ(loaded.men(), original.men());
  EXPECT_EQ(loaded.women(), original.women());
  EXPECT_EQ(loaded.feedback(), original.feedback());
}

TEST(Action, ParseAndName) {
  for (Action a : {Action::kLike, Action::kNope, Action::kThank, Action::kSorry}) {
    EXPECT_EQ(ParseAction(ActionName(a)), a);
  }
  EXPECT_TRUE(IsPositive(Action::kThank));
  EXPECT_FALSE(IsPositive(Action::kSorry));
  EXPECT_THROW(ParseAction("Like"), DataError);
}

// Reference: mean absolute pairwise difference over 2 n^2 mean.
double BruteForceGini(const std::vector<double>& v) {
  double diff = 0.0, sum = 0.0;
  for (double a : v) {
    sum += a;
    for (double b : v) diff += std::abs(a - b);
  }
  const double n = static_cast<double>(v.size());
  return diff / (2.0 * n * sum);
}

TEST(Gini, Examples) {
  EXPECT_DOUBLE_EQ(Gini(std::vector<double>{5, 5, 5, 5}), 0.0);
  EXPECT_NEAR(BruteForceGini({1, 3}), 0.25, 1e-15);
  EXPECT_NEAR(Gini(std::vector<double>{1, 3}), 0.25, 1e-15);
  EXPECT_NEAR(Gini(std::vector<double>{0, 0, 0, 12}), 0.75, 1e-15);
}

TEST(Gini, MatchesPairwiseDefinition) {
  std::mt19937_64 rng(17);
  std::exponential_distribution<double> draw(1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + trial % 13);
    for (double& x : v) x = draw(rng);
    EXPECT_NEAR(Gini(v), BruteForceGini(v), 1e-12);
  }
}

TEST(Gini, ScaleAndPermutationInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> draw(0.0, 10.0);
  std::vector<double> v(40);
  for (double& x : v) x = draw(rng);
  const double g = Gini(v);
  for (double c : {1e-3, 0.5, 7.0, 1e6}) {
    std::vector<double> scaled = v;
    for (double& x : scaled) x *= c;
    EXPECT_NEAR(Gini(scaled), g, 1e-12);
  }
  for (int i = 0; i < 5; ++i) {
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_NEAR(Gini(v), g, 1e-12);
  }
}

TEST(Gini, RangeAndErrors) {
  EXPECT_NEAR(Gini(std::vector<double>{0, 0, 1}), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(Gini(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(Gini(std::vector<double>{0, 0}), std::invalid_argument);
  EXPECT_THROW(Gini(std::vector<double>{1, -1}), std::invalid_argument);
}

TEST(Spearman, AverageRanks) {
  EXPECT_NEAR(SpearmanCorrelation(std::vector<double>{1, 2, 3, 4},
                                  std::vector<double>{10, 20, 30, 40}), 1.0, 1e-15);
  EXPECT_NEAR(SpearmanCorrelation(std::vector<double>{1, 2, 3},
                                  std::vector<double>{3, 2, 1}), -1.0, 1e-15);
  // Ranks of b with a tie: (1, 2.5, 2.5); Pearson of (1,2,3) vs that is sqrt(3)/2.
  EXPECT_NEAR(SpearmanCorrelation(std::vector<double>{1, 2, 3},
                                  std::vector<double>{0, 5, 5}), std::sqrt(3.0) / 2.0, 1e-12);
}

}  // namespace
}  // namespace tumatch
