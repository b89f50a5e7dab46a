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

#include "tumatch/mf.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"
#include "tumatch/binary_io.h"

namespace tumatch {
namespace {

constexpr std::array<char, 4> kModelMagic = {'T', 'U', 'F', 'M'};

double Softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

const char* DirectionName(Direction direction) {
  return direction == Direction::kXToY ? "x_to_y" : "y_to_x";
}

void ValidateModel(const FactorModel& model) {
  if (model.d < 1) throw DataError("factor model needs d >= 1");
  if (model.u_x.cols() != model.d || model.v_y.cols() != model.d ||
      model.bias_x.size() != model.u_x.rows() ||
      model.bias_y.size() != model.v_y.rows()) {
    throw DataError("factor model shapes are inconsistent");
  }
  auto finite = [](std::span<const double> s) {
    return std::all_of(s.begin(), s.end(), [](double v) { return std::isfinite(v); });
  };
  if (!finite(model.u_x.data()) || !finite(model.v_y.data()) ||
      !finite(model.bias_x) || !finite(model.bias_y)) {
    throw DataError("factor model has non-finite entries");
  }
}

FactorModel InitFactorModel(size_t size_x, size_t size_y, size_t d,
                            Direction direction, uint64_t seed) {
  if (d < 1) throw DataError("factor model needs d >= 1");
  FactorModel model;
  model.direction = direction;
  model.d = d;
  model.u_x = Matrix(size_x, d);
  model.v_y = Matrix(size_y, d);
  model.bias_x.assign(size_x, 0.0);
  model.bias_y.assign(size_y, 0.0);
  const double scale = 0.1 / std::sqrt(static_cast<double>(d));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-scale, scale);
  for (double& v : model.u_x.data()) v = init(rng);
  for (double& v : model.v_y.data()) v = init(rng);
  return model;
}

std::vector<LabeledPair> CollectExamples(const Market& market, Direction direction,
                                         bool use_explicit_negatives) {
  const Side labeller = direction == Direction::kXToY ? Side::kX : Side::kY;
  std::vector<LabeledPair> examples;
  for (const auto& e : market.feedback()) {
    const UserRef s = market.Lookup(e.sender);
    if (s.side != labeller) continue;
    const bool positive = IsPositive(e.action);
    if (!positive && !use_explicit_negatives) continue;
    const UserRef r = market.Lookup(e.receiver);
    const uint32_t x = labeller == Side::kX ? s.index : r.index;
    const uint32_t y = labeller == Side::kX ? r.index : s.index;
    examples.push_back({x, y, positive ? 1.0 : 0.0});
  }
  return examples;
}

double Logistic(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

double RawAffinity(const FactorModel& model, size_t x, size_t y) {
  const auto u = model.u_x.row(x);
  const auto v = model.v_y.row(y);
  double dot = 0.0;
  for (size_t k = 0; k < model.d; ++k) dot += u[k] * v[k];
  return dot + model.bias_x[x] + model.bias_y[y];
}

double Score(const FactorModel& model, size_t x, size_t y) {
  if (x >= model.size_x() || y >= model.size_y()) {
    throw std::out_of_range("score index out of range");
  }
  return Logistic(RawAffinity(model, x, y));
}

double ExampleLoss(const FactorModel& model, const LabeledPair& example, double l2) {
  const double a = RawAffinity(model, example.x, example.y);
  const double log_loss =
      example.label * Softplus(-a) + (1.0 - example.label) * Softplus(a);
  double norm = 0.0;
  for (double u : model.u_x.row(example.x)) norm += u * u;
  for (double v : model.v_y.row(example.y)) norm += v * v;
  return log_loss + 0.5 * l2 * norm;
}

ExampleGradient ComputeExampleGradient(const FactorModel& model,
                                       const LabeledPair& example, double l2) {
  const double g = Logistic(RawAffinity(model, example.x, example.y)) - example.label;
  const auto u = model.u_x.row(example.x);
  const auto v = model.v_y.row(example.y);
  ExampleGradient grad;
  grad.u.resize(model.d);
  grad.v.resize(model.d);
  for (size_t k = 0; k < model.d; ++k) {
    grad.u[k] = g * v[k] + l2 * u[k];
    grad.v[k] = g * u[k] + l2 * v[k];
  }
  grad.bias_x = g;
  grad.bias_y = g;
  return grad;
}

double TrainingObjective(const FactorModel& model,
                         std::span<const LabeledPair> examples, double l2) {
  double total = 0.0;
  for (const auto& ex : examples) total += ExampleLoss(model, ex, l2);
  return total;
}

FactorModel TrainMf(const Market& market, Direction direction,
                    const TrainConfig& config) {
  if (config.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (!(config.learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
  if (config.l2 < 0.0 || config.negative_sampling_rate < 0.0) {
    throw std::invalid_argument("l2 and negative_sampling_rate must be >= 0");
  }
  const auto examples =
      CollectExamples(market, direction, config.use_explicit_negatives);
  const bool any_positive = std::any_of(examples.begin(), examples.end(),
                                        [](const LabeledPair& e) { return e.label > 0.5; });
  if (!any_positive) {
    throw DataError(std::string("no positive events for direction ") +
                    DirectionName(direction) + "; use uniform scores instead");
  }

  FactorModel model = InitFactorModel(market.size_x(), market.size_y(), config.d,
                                      direction, config.seed);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const double whole = std::floor(config.negative_sampling_rate);
  const double frac = config.negative_sampling_rate - whole;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<uint32_t> pick_x(0, static_cast<uint32_t>(market.size_x() - 1));
  std::uniform_int_distribution<uint32_t> pick_y(0, static_cast<uint32_t>(market.size_y() - 1));

  const double lr = config.learning_rate;
  const double l2 = config.l2;
  const size_t d = config.d;
  std::vector<LabeledPair> epoch_examples;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    epoch_examples.assign(examples.begin(), examples.end());
    if (config.negative_sampling_rate > 0.0) {
      for (const auto& ex : examples) {
        if (ex.label < 0.5) continue;
        int count = static_cast<int>(whole) + (unit(rng) < frac ? 1 : 0);
        for (int i = 0; i < count; ++i) {
          if (direction == Direction::kXToY) {
            epoch_examples.push_back({ex.x, pick_y(rng), 0.0});
          } else {
            epoch_examples.push_back({pick_x(rng), ex.y, 0.0});
          }
        }
      }
    }
    std::shuffle(epoch_examples.begin(), epoch_examples.end(), rng);
    for (const auto& ex : epoch_examples) {
      auto u = model.u_x.row(ex.x);
      auto v = model.v_y.row(ex.y);
      const double g = Logistic(RawAffinity(model, ex.x, ex.y)) - ex.label;
      for (size_t k = 0; k < d; ++k) {
        const double uk = u[k];
        const double vk = v[k];
        u[k] -= lr * (g * vk + l2 * uk);
        v[k] -= lr * (g * uk + l2 * vk);
      }
      model.bias_x[ex.x] -= lr * g;
      model.bias_y[ex.y] -= lr * g;
    }
  }
  ValidateModel(model);
  return model;
}

ScoreMatrix BuildScoreMatrix(const FactorModel& model_xy,
                             const FactorModel& model_yx, int threads) {
  if (model_xy.size_x() != model_yx.size_x() || model_xy.size_y() != model_yx.size_y()) {
    throw DataError("models cover different markets: " +
                    std::to_string(model_xy.size_x()) + "x" +
                    std::to_string(model_xy.size_y()) + " vs " +
                    std::to_string(model_yx.size_x()) + "x" +
                    std::to_string(model_yx.size_y()));
  }
  if (model_xy.direction != Direction::kXToY || model_yx.direction != Direction::kYToX) {
    throw DataError("score matrix needs an x_to_y and a y_to_x model");
  }
  const size_t nx = model_xy.size_x();
  const size_t ny = model_xy.size_y();
  ScoreMatrix scores{Matrix(nx, ny), Matrix(nx, ny)};
  ParallelFor(nx, threads, [&](size_t begin, size_t end) {
    for (size_t x = begin; x < end; ++x) {
      for (size_t y = 0; y < ny; ++y) {
        scores.p_xy(x, y) = Logistic(RawAffinity(model_xy, x, y));
        scores.p_yx(x, y) = Logistic(RawAffinity(model_yx, x, y));
      }
    }
  });
  return scores;
}

void SaveModel(const FactorModel& model, const std::string& path) {
  ValidateModel(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  ContainerHeader header;
  header.magic = kModelMagic;
  header.d = model.d;
  header.size_x = model.size_x();
  header.size_y = model.size_y();
  header.direction = static_cast<uint32_t>(model.direction);
  WriteHeader(out, header);
  WriteF64Block(out, model.u_x.data());
  WriteF64Block(out, model.v_y.data());
  WriteF64Block(out, model.bias_x);
  WriteF64Block(out, model.bias_y);
  if (!out) throw DataError("write failed for " + path);
}

FactorModel LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path);
  const ContainerHeader header = ReadHeader(in, kModelMagic);
  if (header.direction > 1) throw DataError("bad model direction in " + path);
  if (header.d < 1) throw DataError("model " + path + " has d = 0");
  FactorModel model;
  model.direction = static_cast<Direction>(header.direction);
  model.d = header.d;
  model.u_x = Matrix(header.size_x, header.d);
  model.v_y = Matrix(header.size_y, header.d);
  model.bias_x.resize(header.size_x);
  model.bias_y.resize(header.size_y);
  ReadF64Block(in, model.u_x.data());
  ReadF64Block(in, model.v_y.data());
  ReadF64Block(in, model.bias_x);
  ReadF64Block(in, model.bias_y);
  ValidateModel(model);
  return model;
}

std::string ModelToJson(const FactorModel& model) {
  using nlohmann::json;
  auto rows = [](const Matrix& m) {
    json out = json::array();
    for (size_t r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      out.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return out;
  };
  json j;
  j["direction"] = DirectionName(model.direction);
  j["d"] = model.d;
  j["size_x"] = model.size_x();
  j["size_y"] = model.size_y();
  j["u_x"] = rows(model.u_x);
  j["v_y"] = rows(model.v_y);
  j["bias_x"] = model.bias_x;
  j["bias_y"] = model.bias_y;
  return j.dump(2);
}

}  // namespace tumatch
