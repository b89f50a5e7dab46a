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
#include <string_view>

#include "tumatch/market.h"

namespace tumatch {

// Baseline reciprocal aggregation phi(p_xy, p_yx) -> [0, 1].
class FusionKind {
 public:
  enum class Kind { kHarmonic, kArithmetic, kGeometric, kCrossRatioUniform, kProduct, kWeighted };

  static FusionKind Harmonic() { return FusionKind(Kind::kHarmonic, std::nullopt); }
  static FusionKind Arithmetic() { return FusionKind(Kind::kArithmetic, std::nullopt); }
  static FusionKind Geometric() { return FusionKind(Kind::kGeometric, std::nullopt); }
  static FusionKind CrossRatioUniform() {
    return FusionKind(Kind::kCrossRatioUniform, std::nullopt);
  }
  static FusionKind Product() { return FusionKind(Kind::kProduct, std::nullopt); }
  // weight in [0, 1] multiplies p_xy.
  static FusionKind Weighted(double weight);

  // harmonic | arithmetic | geometric | crossratio | product | weighted:<w>
  static FusionKind Parse(std::string_view text);

  Kind kind() const { return kind_; }
  std::optional<double> weight() const { return weight_; }
  std::string ToString() const;

 private:
  FusionKind(Kind kind, std::optional<double> weight) : kind_(kind), weight_(weight) {}
  Kind kind_;
  std::optional<double> weight_;
};

// Cross-ratio uniform is ab / (ab + (1-a)(1-b)), undefined (throws
// std::domain_error) only for {a, b} = {0, 1}. Inputs outside [0, 1] throw
// std::invalid_argument.
double Fuse(const FusionKind& kind, double p_xy, double p_yx);

// Elementwise Fuse; errors carry the (x, y) coordinate.
Matrix FuseMatrix(const FusionKind& kind, const ScoreMatrix& scores);

}  // namespace tumatch
