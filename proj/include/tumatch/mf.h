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
#include <span>
#include <string>
#include <vector>

#include "tumatch/common.h"
#include "tumatch/market.h"

namespace tumatch {

// Which side's actions are the labels: kXToY models how much x likes y.
enum class Direction : uint8_t { kXToY = 0, kYToX = 1 };

const char* DirectionName(Direction direction);

// Logistic matrix factorization for one score direction. Both directions are
// indexed (x, y): u_x holds the X-side factors, v_y the Y-side factors.
struct FactorModel {
  Direction direction = Direction::kXToY;
  size_t d = 0;
  Matrix u_x;
  Matrix v_y;
  std::vector<double> bias_x;
  std::vector<double> bias_y;

  size_t size_x() const { return u_x.rows(); }
  size_t size_y() const { return v_y.rows(); }
  bool operator==(const FactorModel&) const = default;
};

// Throws DataError unless d >= 1, shapes agree, and every entry is finite.
void ValidateModel(const FactorModel& model);

struct TrainConfig {
  size_t d = 8;
  int epochs = 20;
  double learning_rate = 0.05;
  double l2 = 1e-3;
  // Implicit negatives drawn uniformly per positive per epoch.
  double negative_sampling_rate = 1.0;
  uint64_t seed = 0;
  // Also train on nope/sorry as label 0.
  bool use_explicit_negatives = false;
};

struct LabeledPair {
  uint32_t x;
  uint32_t y;
  double label;
};

// Seeded uniform(-0.1/sqrt(d), 0.1/sqrt(d)) factors, zero biases.
FactorModel InitFactorModel(size_t size_x, size_t size_y, size_t d,
                            Direction direction, uint64_t seed);

// Labels for one direction: like/thank sent by the labelled side are 1,
// nope/sorry are 0 when use_explicit_negatives is set.
std::vector<LabeledPair> CollectExamples(const Market& market, Direction direction,
                                         bool use_explicit_negatives);

// Plain SGD on the logistic loss. Deterministic given config.seed. Throws
// DataError when the direction has no positive events.
FactorModel TrainMf(const Market& market, Direction direction,
                    const TrainConfig& config);

double RawAffinity(const FactorModel& model, size_t x, size_t y);
double Logistic(double a);
// logistic(u_x[x] . v_y[y] + bias_x[x] + bias_y[y]).
double Score(const FactorModel& model, size_t x, size_t y);

// Per-example objective: log loss + l2/2 (|u_x|^2 + |v_y|^2).
double ExampleLoss(const FactorModel& model, const LabeledPair& example, double l2);

struct ExampleGradient {
  std::vector<double> u;  // d
  std::vector<double> v;  // d
  double bias_x = 0.0;
  double bias_y = 0.0;
};
ExampleGradient ComputeExampleGradient(const FactorModel& model,
                                       const LabeledPair& example, double l2);

// Sum of ExampleLoss over the examples.
double TrainingObjective(const FactorModel& model,
                         std::span<const LabeledPair> examples, double l2);

// Dense p_xy from model_xy and p_yx from model_yx. O(|X||Y|d).
ScoreMatrix BuildScoreMatrix(const FactorModel& model_xy,
                             const FactorModel& model_yx, int threads = 1);

void SaveModel(const FactorModel& model, const std::string& path);
FactorModel LoadModel(const std::string& path);
std::string ModelToJson(const FactorModel& model);

}  // namespace tumatch
