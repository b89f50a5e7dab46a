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

#include "tumatch/fusion.h"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace tumatch {

FusionKind FusionKind::Weighted(double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw std::invalid_argument("fusion weight must lie in [0, 1]");
  }
  return FusionKind(Kind::kWeighted, weight);
}

FusionKind FusionKind::Parse(std::string_view text) {
  if (text == "harmonic") return Harmonic();
  if (text == "arithmetic") return Arithmetic();
  if (text == "geometric") return Geometric();
  if (text == "crossratio") return CrossRatioUniform();
  if (text == "product") return Product();
  constexpr std::string_view kWeightedPrefix = "weighted:";
  if (text.starts_with(kWeightedPrefix)) {
    const std::string number(text.substr(kWeightedPrefix.size()));
    size_t used = 0;
    double w = 0.0;
    try {
      w = std::stod(number, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != number.size()) {
      throw std::invalid_argument("bad fusion weight '" + number + "'");
    }
    return Weighted(w);
  }
  throw std::invalid_argument("unknown fusion kind '" + std::string(text) + "'");
}

std::string FusionKind::ToString() const {
  switch (kind_) {
    case Kind::kHarmonic: return "harmonic";
    case Kind::kArithmetic: return "arithmetic";
    case Kind::kGeometric: return "geometric";
    case Kind::kCrossRatioUniform: return "crossratio";
    case Kind::kProduct: return "product";
    case Kind::kWeighted: return "weighted:" + std::to_string(*weight_);
  }
  return "?";
}

double Fuse(const FusionKind& kind, double a, double b) {
  if (!(a >= 0.0 && a <= 1.0) || !(b >= 0.0 && b <= 1.0)) {
    throw std::invalid_argument("fusion inputs must lie in [0, 1]");
  }
  switch (kind.kind()) {
    case FusionKind::Kind::kHarmonic:
      return a + b == 0.0 ? 0.0 : 2.0 * a * b / (a + b);
    case FusionKind::Kind::kArithmetic:
      return 0.5 * (a + b);
    case FusionKind::Kind::kGeometric:
      return std::sqrt(a * b);
    case FusionKind::Kind::kProduct:
      return a * b;
    case FusionKind::Kind::kWeighted: {
      const double w = *kind.weight();
      return w * a + (1.0 - w) * b;
    }
    case FusionKind::Kind::kCrossRatioUniform: {
      const double agree = a * b;
      const double disagree = (1.0 - a) * (1.0 - b);
      if (agree + disagree == 0.0) throw std::domain_error("undefined cross-ratio");
      return agree / (agree + disagree);
    }
  }
  return 0.0;
}

Matrix FuseMatrix(const FusionKind& kind, const ScoreMatrix& scores) {
  if (scores.p_xy.rows() != scores.p_yx.rows() || scores.p_xy.cols() != scores.p_yx.cols()) {
    throw DataError("score matrices differ in shape");
  }
  Matrix out(scores.size_x(), scores.size_y());
  for (size_t x = 0; x < out.rows(); ++x) {
    for (size_t y = 0; y < out.cols(); ++y) {
      try {
        out(x, y) = Fuse(kind, scores.p_xy(x, y), scores.p_yx(x, y));
      } catch (const std::exception& e) {
        throw DataError("fusion failed at (" + std::to_string(x) + ", " +
                        std::to_string(y) + "): " + e.what());
      }
    }
  }
  return out;
}

}  // namespace tumatch
