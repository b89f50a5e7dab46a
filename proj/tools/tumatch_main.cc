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

// Command-line driver: simulate -> ingest -> train -> fuse/solve -> recommend,
// plus verification, exposure metrics, and scaling benchmarks.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tumatch/approx.h"
#include "tumatch/bench.h"
#include "tumatch/equilibrium.h"
#include "tumatch/fusion.h"
#include "tumatch/market.h"
#include "tumatch/metrics.h"
#include "tumatch/mf.h"
#include "tumatch/oracle.h"
#include "tumatch/recommend.h"
#include "tumatch/simgen.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tumatch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNonConvergence = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

void Emit(const Globals& g, const json& report) {
  if (g.out.empty()) {
    std::cout << report.dump(2) << '\n';
    return;
  }
  std::ofstream f(g.out);
  if (!f) throw DataError("cannot write " + g.out);
  f << report.dump(2) << '\n';
}

Side ParseSideFlag(const std::string& s) {
  if (s == "X" || s == "x") return Side::kX;
  if (s == "Y" || s == "y") return Side::kY;
  throw UsageError("side must be X or Y");
}

FeedbackFormat ResolveFormat(const std::string& format, const std::string& path) {
  if (format == "csv") return FeedbackFormat::kCsv;
  if (format == "jsonl") return FeedbackFormat::kJsonl;
  if (format != "auto") throw UsageError("format must be csv, jsonl, or auto");
  return path.ends_with(".jsonl") ? FeedbackFormat::kJsonl : FeedbackFormat::kCsv;
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir + ": " + ec.message());
}

struct ModelInputs {
  std::string roster;
  std::string model_xy;
  std::string model_yx;

  void Add(CLI::App* cmd) {
    cmd->add_option("--roster", roster, "user_id,side roster")->required();
    cmd->add_option("--model-xy", model_xy, "x_to_y model file")->required();
    cmd->add_option("--model-yx", model_yx, "y_to_x model file")->required();
  }
};

struct LoadedModels {
  Market market;
  FactorModel xy;
  FactorModel yx;
};

LoadedModels Load(const ModelInputs& in) {
  Market market = LoadRoster(in.roster);
  FactorModel xy = LoadModel(in.model_xy);
  FactorModel yx = LoadModel(in.model_yx);
  for (const FactorModel* m : {&xy, &yx}) {
    if (m->size_x() != market.size_x() || m->size_y() != market.size_y()) {
      throw DataError("model shape does not match the roster");
    }
  }
  if (xy.direction != Direction::kXToY || yx.direction != Direction::kYToX) {
    throw DataError("--model-xy must be x_to_y and --model-yx must be y_to_x");
  }
  return {std::move(market), std::move(xy), std::move(yx)};
}

struct SolveOptions {
  double tol = 1e-10;
  int max_sweeps = 1000;
  double damping = 1.0;
  bool no_gauge = false;

  void Add(CLI::App* cmd) {
    cmd->add_option("--tol", tol, "max marginal violation")->capture_default_str();
    cmd->add_option("--max-sweeps", max_sweeps, "IPFP sweep limit")->capture_default_str();
    cmd->add_option("--damping", damping, "update damping in (0, 1]")->capture_default_str();
    cmd->add_flag("--no-gauge", no_gauge, "disable per-sweep gauge balancing");
  }
  SolverConfig Config(int threads) const {
    SolverConfig c;
    c.tol = tol;
    c.max_sweeps = max_sweeps;
    c.damping = damping;
    c.balance_gauge = !no_gauge;
    c.threads = threads;
    return c;
  }
};

json MatchingDiagnostics(const EquilibriumMatching& m, double wall_ms) {
  return {{"sweeps", m.iterations},
          {"residual", m.residual},
          {"converged", m.converged},
          {"wall_ms", wall_ms}};
}

double ElapsedMs(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

// ---------------------------------------------------------------- simulate
struct SimulateCmd {
  SimConfig config;
  std::string out_dir;

  void Add(CLI::App& app) {
    auto* cmd = app.add_subcommand("simulate", "generate a synthetic market");
    cmd->add_option("--nx", config.n_x, "users on side X")->capture_default_str();
    cmd->add_option("--ny", config.n_y, "users on side Y")->capture_default_str();
    cmd->add_option("--d", config.d_true, "latent dimension")->capture_default_str();
    cmd->add_option("--skew", config.popularity_skew, "popularity skew")->capture_default_str();
    cmd->add_option("--events", config.events_per_user, "swipes per user")->capture_default_str();
    cmd->add_option("--base-logit", config.base_logit, "base like logit")->capture_default_str();
    cmd->add_option("--out-dir", out_dir, "output directory")->required();
  }

  int Run(const Globals& g) {
    config.seed = g.seed;
    const SimulatedMarket sim = GenerateMarket(config);
    EnsureDir(out_dir);
    SaveRoster(sim.market, out_dir + "/roster.csv");
    SaveFeedbackCsv(sim.market, out_dir + "/feedback.csv");
    SaveModel(sim.truth_xy, out_dir + "/truth_xy.bin");
    SaveModel(sim.truth_yx, out_dir + "/truth_yx.bin");
    json report = {{"size_x", sim.market.size_x()},
                   {"size_y", sim.market.size_y()},
                   {"events", sim.market.feedback().size()},
                   {"seed", g.seed}};
    const auto deg_y = LikeInDegree(sim.market, Side::kY);
    const auto deg_x = LikeInDegree(sim.market, Side::kX);
    auto gini_or_null = [](const std::vector<double>& v) -> json {
      for (double d : v) {
        if (d > 0.0) return Gini(v);
      }
      return nullptr;
    };
    report["like_in_degree_gini_y"] = gini_or_null(deg_y);
    report["like_in_degree_gini_x"] = gini_or_null(deg_x);
    Emit(g, report);
    return kExitOk;
  }
};

// ---------------------------------------------------------------- ingest
struct IngestCmd {
  std::string feedback, roster, format = "auto", out_dir;

  void Add(CLI::App& app) {
    auto* cmd = app.add_subcommand("ingest", "validate and summarize a feedback log");
    cmd->add_option("--feedback", feedback, "feedback file (csv or jsonl)")->required();
    cmd->add_option("--roster", roster, "user_id,side roster");
    cmd->add_option("--format", format, "csv | jsonl | auto")->capture_default_str();
    cmd->add_option("--out-dir", out_dir, "write normalized roster.csv and feedback.csv");
  }

  int Run(const Globals& g) {
    const Market market = LoadFeedback(feedback, ResolveFormat(format, feedback), roster);
    std::map<std::string, size_t> counts;
    for (const auto& e : market.feedback()) ++counts[ActionName(e.action)];
    if (!out_dir.empty()) {
      EnsureDir(out_dir);
      SaveRoster(market, out_dir + "/roster.csv");
      SaveFeedbackCsv(market, out_dir + "/feedback.csv");
    }
    Emit(g, {{"size_x", market.size_x()},
             {"size_y", market.size_y()},
             {"events", market.feedback().size()},
             {"actions", counts}});
    return kExitOk;
  }
};

// ---------------------------------------------------------------- train
struct TrainCmd {
  std::string feedback, roster, format = "auto", out_dir;
  TrainConfig base;
  std::optional<size_t> yx_d;
  std::optional<int> yx_epochs;
  std::optional<double> yx_lr, yx_l2, yx_neg_rate;
  bool json_export = false;

  void Add(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "train both directional MF models");
    cmd->add_option("--feedback", feedback, "feedback file")->required();
    cmd->add_option("--roster", roster, "user_id,side roster");
    cmd->add_option("--format", format, "csv | jsonl | auto")->capture_default_str();
    cmd->add_option("--out-dir", out_dir, "output directory")->required();
    cmd->add_option("--d", base.d, "embedding dimension")->capture_default_str();
    cmd->add_option("--epochs", base.epochs, "SGD epochs")->capture_default_str();
    cmd->add_option("--lr", base.learning_rate, "learning rate")->capture_default_str();
    cmd->add_option("--l2", base.l2, "L2 on factors")->capture_default_str();
    cmd->add_option("--neg-rate", base.negative_sampling_rate,
                    "implicit negatives per positive")->capture_default_str();
    cmd->add_flag("--explicit-negatives", base.use_explicit_negatives,
                  "train on nope/sorry as negatives");
    cmd->add_option("--yx-d", yx_d, "override d for the y_to_x model");
    cmd->add_option("--yx-epochs", yx_epochs, "override epochs for the y_to_x model");
    cmd->add_option("--yx-lr", yx_lr, "override learning rate for the y_to_x model");
    cmd->add_option("--yx-l2", yx_l2, "override l2 for the y_to_x model");
    cmd->add_option("--yx-neg-rate", yx_neg_rate, "override negative rate for y_to_x");
    cmd->add_flag("--json-export", json_export, "also write human-readable JSON models");
  }

  int Run(const Globals& g) {
    const Market market = LoadFeedback(feedback, ResolveFormat(format, feedback), roster);
    TrainConfig cxy = base;
    cxy.seed = g.seed;
    TrainConfig cyx = base;
    cyx.seed = g.seed + 1;
    if (yx_d) cyx.d = *yx_d;
    if (yx_epochs) cyx.epochs = *yx_epochs;
    if (yx_lr) cyx.learning_rate = *yx_lr;
    if (yx_l2) cyx.l2 = *yx_l2;
    if (yx_neg_rate) cyx.negative_sampling_rate = *yx_neg_rate;

    EnsureDir(out_dir);
    json report = {{"size_x", market.size_x()}, {"size_y", market.size_y()}};
    for (auto [dir, cfg, name] : {std::tuple{Direction::kXToY, cxy, "xy"},
                                  std::tuple{Direction::kYToX, cyx, "yx"}}) {
      const auto t0 = std::chrono::steady_clock::now();
      const FactorModel model = TrainMf(market, dir, cfg);
      const double ms = ElapsedMs(t0);
      const std::string stem = out_dir + "/model_" + name;
      SaveModel(model, stem + ".bin");
      if (json_export) {
        std::ofstream(stem + ".json") << ModelToJson(model) << '\n';
      }
      const auto examples = CollectExamples(market, dir, true);
      report[std::string("model_") + name] = {
          {"direction", DirectionName(dir)},
          {"d", cfg.d},
          {"examples", examples.size()},
          {"objective", TrainingObjective(model, examples, cfg.l2)},
          {"wall_ms", ms}};
    }
    Emit(g, report);
    return kExitOk;
  }
};

// ---------------------------------------------------------------- fuse
struct FuseCmd {
  ModelInputs inputs;
  std::string fusion = "harmonic", out_csv;

  void Add(CLI::App& app) {
    auto* cmd = app.add_subcommand("fuse", "baseline reciprocal scores");
    inputs.Add(cmd);
    cmd->add_option("--fusion", fusion,
                    "harmonic|arithmetic|geometric|crossratio|product|weighted:<w>")
        ->capture_default_str();
    cmd->add_option("--out-csv", out_csv, "write x_id,y_id,score");
  }

  int Run(const Globals& g) {
    FusionKind kind = FusionKind::Harmonic();
    try {
      kind = FusionKind::Parse(fusion);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const LoadedModels lm = Load(inputs);
    const Matrix fused = FuseMatrix(kind, BuildScoreMatrix(lm.xy, lm.yx, g.threads));
    if (!out_csv.empty()) {
      std::FILE* f = std::fopen(out_csv.c_str(), "w");
      if (!f) throw DataError("cannot write " + out_csv);
      std::fputs("x_id,y_id,score\n", f);
      for (size_t x = 0; x < fused.rows(); ++x) {
        for (size_t y = 0; y < fused.cols(); ++y) {
          std::fprintf(f, "%s,%s,%.17g\n", lm.market.men()[x].c_str(),
                       lm.market.women()[y].c_str(), fused(x, y));
        }
      }
      std::fclose(f);
    }
    double lo = 1.0, hi = 0.0, sum = 0.0;
    for (double v : fused.data()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    Emit(g, {{"fusion", kind.ToString()},
             {"min", lo},
             {"max", hi},
             {"mean", sum / static_cast<double>(fused.data().size())}});
    return kExitOk;
  }
};

// ---------------------------------------------------------------- solve
ApproxConfig ParseApprox(const std::string& spec, uint64_t seed) {
  ApproxConfig base;
  base.seed = seed;
  try {
    return ApproxConfig::Parse(spec, base);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

struct SolveCmd {
  ModelInputs inputs;
  SolveOptions solve;
  std::string method = "exact", approx, out_dir;

  void Add(CLI::App& app) {
    auto* cmd = app.add_subcommand("solve", "equilibrium matching via IPFP");
    inputs.Add(cmd);
    solve.Add(cmd);
    cmd->add_option("--method", method, "exact | approx")->capture_default_str();
    cmd->add_option("--approx", approx, "top_m=<int>,tail=<int>,tables=<int>,bits=<int>");
    cmd->add_option("--out-dir", out_dir, "write equilibrium.bin and equilibrium.csv");
  }

  int Run(const Globals& g) {
    if (method != "exact" && method != "approx") throw UsageError("method must be exact or approx");
    const LoadedModels lm = Load(inputs);
    const SolverConfig config = solve.Config(g.threads);
    const auto t0 = std::chrono::steady_clock::now();
    EquilibriumMatching matching;
    json report;
    if (method == "exact" && approx.empty()) {
      const ReciprocalWeights w =
          ComputeReciprocalWeights(BuildScoreMatrix(lm.xy, lm.yx, g.threads), g.threads);
      matching = SolveIpfp(w, config);
      report = MatchingDiagnostics(matching, ElapsedMs(t0));
    } else {
      const ApproxEquilibrium eq =
          SolveIpfpApprox(lm.xy, lm.yx, config, ParseApprox(approx, g.seed));
      const double ms = ElapsedMs(t0);
      report = {{"sweeps", eq.sweeps},
                {"residual", eq.residual},
                {"converged", eq.converged},
                {"wall_ms", ms},
                {"setup_ms", eq.setup_ms},
                {"error_report",
                 {{"audit_residual", eq.report.audit_residual},
                  {"rows_audited", eq.report.rows_audited},
                  {"cols_audited", eq.report.cols_audited},
                  {"row_sum_variance", eq.report.row_sum_variance},
                  {"col_sum_variance", eq.report.col_sum_variance}}}};
      if (!out_dir.empty()) matching = MaterializeMatching(eq, lm.xy, lm.yx);
      matching.converged = eq.converged;
    }
    if (!out_dir.empty()) {
      EnsureDir(out_dir);
      SaveEquilibrium(matching, out_dir + "/equilibrium.bin");
      const ScoreMatrix scores = BuildScoreMatrix(lm.xy, lm.yx, g.threads);
      WriteEquilibriumCsv(lm.market, matching, RecoverTransfers(scores, matching),
                          out_dir + "/equilibrium.csv");
    }
    Emit(g, report);
    return report["converged"].get<bool>() ? kExitOk : kExitNonConvergence;
  }
};

// ---------------------------------------------------------------- recommend
struct RecommendCmd {
  ModelInputs inputs;
  SolveOptions solve;
  std::string mode = "mtrs", fusion = "harmonic", equilibrium, side = "X", user, out_csv;
  size_t k = 10;

  void Add(CLI::App& app) {
    auto* cmd = app.add_subcommand("recommend", "top-k reciprocal recommendations");
    inputs.Add(cmd);
    solve.Add(cmd);
    cmd->add_option("--mode", mode, "fusion | mtrs | transfer")->capture_default_str();
    cmd->add_option("--fusion", fusion, "fusion kind for --mode fusion")->capture_default_str();
    cmd->add_option("--equilibrium", equilibrium, "precomputed equilibrium.bin");
    cmd->add_option("--side", side, "side receiving recommendations (X or Y)")
        ->capture_default_str();
    cmd->add_option("--user", user, "single user id (default: every user of --side)");
    cmd->add_option("--k", k, "list length")->capture_default_str();
    cmd->add_option("--out-csv", out_csv, "write user_id,rank,candidate_id,score");
  }

  int Run(const Globals& g) {
    RankingMode rmode;
    FusionKind kind = FusionKind::Harmonic();
    try {
      rmode = ParseRankingMode(mode);
      kind = FusionKind::Parse(fusion);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (k < 1) throw UsageError("--k must be >= 1");
    const Side target = ParseSideFlag(side);
    const LoadedModels lm = Load(inputs);
    const ScoreMatrix scores = BuildScoreMatrix(lm.xy, lm.yx, g.threads);

    std::optional<EquilibriumMatching> matching;
    Matrix ranking;
    if (rmode == RankingMode::kFusion) {
      ranking = FuseMatrix(kind, scores);
    } else {
      if (!equilibrium.empty()) {
        matching = LoadEquilibrium(equilibrium);
        if (matching->mu.rows() != lm.market.size_x() ||
            matching->mu.cols() != lm.market.size_y()) {
          throw DataError("equilibrium shape does not match the roster");
        }
      } else {
        matching = SolveIpfp(ComputeReciprocalWeights(scores, g.threads), solve.Config(g.threads));
        if (!matching->converged) {
          Emit(g, {{"error", "equilibrium did not converge"},
                   {"residual", matching->residual}});
          return kExitNonConvergence;
        }
      }
      ranking = rmode == RankingMode::kMtrs
                    ? matching->mu
                    : TransferUtility(scores, RecoverTransfers(scores, *matching), target);
    }

    std::vector<RecommendationList> lists;
    if (!user.empty()) {
      lists.push_back(RecommendTopK(ranking, lm.market, user, k));
    } else {
      lists = RecommendAll(ranking, lm.market, target, k, g.threads);
    }
    if (!out_csv.empty()) WriteRecommendationsCsv(lists, out_csv);

    json report = {{"mode", mode}, {"lists", lists.size()}, {"k", k}};
    if (user.empty()) {
      const ExposureReport exposure = ExposureMetrics(
          lists, lm.market.ids(Opposite(target)), matching ? &*matching : nullptr);
      report["exposure_gini"] = exposure.gini;
      if (exposure.expected_match_mass) {
        report["expected_match_mass"] = *exposure.expected_match_mass;
      }
    } else {
      json ranked = json::array();
      for (const auto& [cand, score] : lists.front().ranked) {
        ranked.push_back({{"candidate", cand}, {"score", score}});
      }
      report["user"] = user;
      report["ranked"] = ranked;
    }
    Emit(g, report);
    return kExitOk;
  }
};

// ---------------------------------------------------------------- verify
struct VerifyCmd {
  std::string roster, model_xy, model_yx, random;
  double tol = 1e-8;
  double solver_tol = 1e-12;

  void Add(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "verify", "cross-check IPFP against the tatonnement oracle (small markets)");
    cmd->add_option("--roster", roster, "user_id,side roster");
    cmd->add_option("--model-xy", model_xy, "x_to_y model file");
    cmd->add_option("--model-yx", model_yx, "y_to_x model file");
    cmd->add_option("--random", random, "use uniform random scores of shape NxM instead");
    cmd->add_option("--tol", tol, "check tolerance")->capture_default_str();
    cmd->add_option("--solver-tol", solver_tol, "IPFP tolerance")->capture_default_str();
  }

  int Run(const Globals& g) {
    ScoreMatrix scores;
    if (!random.empty()) {
      size_t nx = 0, ny = 0;
      if (std::sscanf(random.c_str(), "%zux%zu", &nx, &ny) != 2 || nx == 0 || ny == 0) {
        throw UsageError("--random expects NxM");
      }
      std::mt19937_64 rng(g.seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      scores = {Matrix(nx, ny), Matrix(nx, ny)};
      for (double& v : scores.p_xy.data()) v = unit(rng);
      for (double& v : scores.p_yx.data()) v = unit(rng);
    } else {
      if (roster.empty() || model_xy.empty() || model_yx.empty()) {
        throw UsageError("verify needs --random or --roster/--model-xy/--model-yx");
      }
      const LoadedModels lm = Load({roster, model_xy, model_yx});
      scores = BuildScoreMatrix(lm.xy, lm.yx, g.threads);
    }
    SolverConfig config;
    config.tol = solver_tol;
    config.threads = g.threads;
    const EquilibriumMatching ipfp = SolveIpfp(ComputeReciprocalWeights(scores), config);
    const Transfers ipfp_tau = RecoverTransfers(scores, ipfp);
    oracle::TatonnementResult orc;
    try {
      orc = oracle::TatonnementEquilibrium(scores);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    } catch (const std::runtime_error& e) {
      Emit(g, {{"error", e.what()}});
      return kExitNonConvergence;
    }
    double linf = 0.0;
    for (size_t i = 0; i < ipfp.mu.data().size(); ++i) {
      linf = std::max(linf, std::abs(ipfp.mu.data()[i] - orc.matching.mu.data()[i]));
    }
    auto to_json = [](const oracle::EquilibriumReport& r) {
      return json{{"marginal_violation", r.marginal_violation},
                  {"demand_gap", r.demand_gap},
                  {"closed_form_gap", r.closed_form_gap},
                  {"tol", r.tol},
                  {"pass", r.pass}};
    };
    const auto check_ipfp = oracle::CheckEquilibrium(scores, ipfp, ipfp_tau, tol);
    const auto check_oracle =
        oracle::CheckEquilibrium(scores, orc.matching, orc.transfers, tol);
    const bool pass = check_ipfp.pass && check_oracle.pass && linf <= 1e-6;
    Emit(g, {{"size_x", scores.size_x()},
             {"size_y", scores.size_y()},
             {"ipfp", {{"sweeps", ipfp.iterations}, {"residual", ipfp.residual},
                       {"converged", ipfp.converged}}},
             {"oracle", {{"iterations", orc.iterations}}},
             {"linf_mu", linf},
             {"check_ipfp", to_json(check_ipfp)},
             {"check_oracle", to_json(check_oracle)},
             {"pass", pass}});
    if (!ipfp.converged) return kExitNonConvergence;
    return pass ? kExitOk : kExitData;
  }
};

// ---------------------------------------------------------------- metrics
struct MetricsCmd {
  std::string recommendations, roster, side = "X", equilibrium;

  void Add(CLI::App& app) {
    auto* cmd = app.add_subcommand("metrics", "exposure concentration of recommendations");
    cmd->add_option("--recommendations", recommendations, "recommendation CSV")->required();
    cmd->add_option("--roster", roster, "user_id,side roster")->required();
    cmd->add_option("--side", side, "side that received the lists")->capture_default_str();
    cmd->add_option("--equilibrium", equilibrium, "equilibrium.bin for expected match mass");
  }

  int Run(const Globals& g) {
    const Side target = ParseSideFlag(side);
    const Market market = LoadRoster(roster);
    const auto lists = ReadRecommendationsCsv(recommendations);
    std::optional<EquilibriumMatching> matching;
    if (!equilibrium.empty()) matching = LoadEquilibrium(equilibrium);
    const ExposureReport report = ExposureMetrics(lists, market.ids(Opposite(target)),
                                                  matching ? &*matching : nullptr);
    json exposure = json::object();
    for (size_t i = 0; i < report.candidates.size(); ++i) {
      exposure[report.candidates[i]] = report.exposure[i];
    }
    json out = {{"lists", lists.size()}, {"gini", report.gini}, {"exposure", exposure}};
    if (report.expected_match_mass) out["expected_match_mass"] = *report.expected_match_mass;
    Emit(g, out);
    return kExitOk;
  }
};

// ---------------------------------------------------------------- bench
struct BenchCmd {
  std::string sizes = "250,500,1000,2000";
  std::string approx;
  BenchOptions options;

  void Add(CLI::App& app) {
    auto* cmd = app.add_subcommand("bench", "per-sweep timing across market sizes");
    cmd->add_option("--sizes", sizes, "comma list of N (square) or NxM")->capture_default_str();
    cmd->add_option("--d", options.d, "factor dimension")->capture_default_str();
    cmd->add_option("--sweeps", options.sweeps, "sweeps per timed run")->capture_default_str();
    cmd->add_option("--min-time-ms", options.min_time_ms, "timing budget per size")
        ->capture_default_str();
    cmd->add_option("--approx", approx, "benchmark the approximate solver with this config");
  }

  int Run(const Globals& g) {
    std::vector<std::pair<size_t, size_t>> parsed;
    std::stringstream ss(sizes);
    std::string item;
    while (std::getline(ss, item, ',')) {
      size_t nx = 0, ny = 0;
      if (std::sscanf(item.c_str(), "%zux%zu", &nx, &ny) == 2) {
        parsed.emplace_back(nx, ny);
      } else if (std::sscanf(item.c_str(), "%zu", &nx) == 1) {
        parsed.emplace_back(nx, nx);
      } else {
        throw UsageError("bad size '" + item + "'");
      }
      if (parsed.back().first == 0 || parsed.back().second == 0) {
        throw UsageError("sizes must be >= 1");
      }
    }
    if (parsed.empty()) throw UsageError("--sizes is empty");
    options.seed = g.seed;
    options.threads = g.threads;
    const BenchReport report = approx.empty()
                                   ? RunExactBench(parsed, options)
                                   : RunApproxBench(parsed, options, ParseApprox(approx, g.seed));
    Emit(g, json::parse(report.ToJson()));
    return kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacity-aware reciprocal recommendation via transferable-utility matching"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file");
  Globals globals;
  app.add_option("--seed", globals.seed, "root random seed")->capture_default_str();
  app.add_option("--threads", globals.threads, "worker threads")->capture_default_str();
  app.add_option("--out", globals.out, "write the JSON report here instead of stdout");

  SimulateCmd simulate;
  IngestCmd ingest;
  TrainCmd train;
  FuseCmd fuse;
  SolveCmd solve;
  RecommendCmd recommend;
  VerifyCmd verify;
  MetricsCmd metrics;
  BenchCmd bench;
  simulate.Add(app);
  ingest.Add(app);
  train.Add(app);
  fuse.Add(app);
  solve.Add(app);
  recommend.Add(app);
  verify.Add(app);
  metrics.Add(app);
  bench.Add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (globals.threads < 1) throw UsageError("--threads must be >= 1");
    if (app.got_subcommand("simulate")) return simulate.Run(globals);
    if (app.got_subcommand("ingest")) return ingest.Run(globals);
    if (app.got_subcommand("train")) return train.Run(globals);
    if (app.got_subcommand("fuse")) return fuse.Run(globals);
    if (app.got_subcommand("solve")) return solve.Run(globals);
    if (app.got_subcommand("recommend")) return recommend.Run(globals);
    if (app.got_subcommand("verify")) return verify.Run(globals);
    if (app.got_subcommand("metrics")) return metrics.Run(globals);
    if (app.got_subcommand("bench")) return bench.Run(globals);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
