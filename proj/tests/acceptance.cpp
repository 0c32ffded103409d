// Copyright 2026 The dnq Authors.
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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dnq/experiment.hpp"
#include "oracles.hpp"

namespace dnq {
namespace {

// Pinned tolerances.
constexpr double kStepFactor = 2.0;
constexpr double kGrid1ReferenceSteps = 445640.0;
constexpr double kGrid2ReferenceSteps = 485460.0;
constexpr double kOracleValue = 0.512;
constexpr double kOracleTol = 1e-6;
constexpr double kMirrorTol = 1e-9;
constexpr double kKappa = 1.44e6;
constexpr double kKappaRelTol = 1e-9;
constexpr double kOptimismMaxFraction = 0.01;
constexpr int kStageGames = 1000;
constexpr int kPayoffRange = 9;
constexpr int kGridResolution = 60;
constexpr double kGridEpsilon = 1e-3;
constexpr double kGridMatchDistance = 0.05;
constexpr double kBestResponseCheck = 1e-9;
constexpr int kKnownSamples = 100;
constexpr double kKnownValueSlack = 1e-9;
constexpr int kExpectedHorizon = 23;
constexpr double kTruncationEpsilon = 0.06;
constexpr double kTheoreticalM = 2.0e7;
constexpr double kTheoreticalMRelTol = 0.05;

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("criterion %d %s: %s (%s)\n", id, name, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

struct Batch {
  ExperimentConfig config;
  ExperimentSetup setup;
  std::vector<RunRecord> records;
  BatchSummary summary;
};

Batch run_game(const std::string& game) {
  ExperimentConfig c;
  c.game = game;
  Batch b{c, prepare_experiment(c), {}, {}};
  b.records = run_batch(b.config, b.setup);
  b.summary = summarize(b.records);
  return b;
}

void convergence_criterion(int id, const char* name, const Batch& b, double reference) {
  const bool rate = b.summary.converged == b.summary.runs && b.summary.failed == 0;
  const bool mean = b.summary.mean_step >= reference / kStepFactor &&
                    b.summary.mean_step <= reference * kStepFactor;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "converged %d/%d, failed %d, mean step %.0f (median %.0f, sd %.0f), reference %.0f",
                b.summary.converged, b.summary.runs, b.summary.failed, b.summary.mean_step,
                b.summary.median_step, b.summary.stddev_step, reference);
  report(id, name, rate && mean, detail);
}

void oracle_criterion(const Batch& grid1) {
  const OracleResult& o = grid1.setup.oracle;
  const GridWorld& g = *grid1.setup.grid;
  const StateIndex s0 = g.model.initial();
  double asym = 0.0;
  for (StateIndex s = 0; s < g.model.num_states(); ++s) {
    asym = std::max(asym, std::abs(o.q_star.v[0][s] - o.q_star.v[1][g.mirror_state(s)]));
  }
  const bool pass = o.converged && std::abs(o.q_star.v[0][s0] - kOracleValue) <= kOracleTol &&
                    std::abs(o.q_star.v[1][s0] - kOracleValue) <= kOracleTol && asym <= kMirrorTol;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "v1 %.12f, v2 %.12f, mirror gap %.3g, residual %.3g after %d sweeps",
                o.q_star.v[0][s0], o.q_star.v[1][s0], asym, o.residual, o.iterations);
  report(3, "oracle exactness", pass, detail);
}

void bounds_criterion(const std::vector<const Batch*>& batches) {
  bool pass = true;
  double worst_succ = 0.0;
  double worst_att = 0.0;
  double worst_esc = 0.0;
  for (const Batch* b : batches) {
    const BoundsReport& r = b->setup.bounds;
    pass &= std::abs(r.kappa / kKappa - 1.0) <= kKappaRelTol || b->config.game != "grid1";
    for (const auto& run : b->records) {
      pass &= run.error.empty();
      pass &= run.successful_updates <= r.max_successful_updates;
      pass &= run.attempted_updates <= r.max_attempted_updates;
      pass &= run.escape_events <= r.max_escape_events;
      worst_succ = std::max(worst_succ, run.successful_updates / r.max_successful_updates);
      worst_att = std::max(worst_att, run.attempted_updates / r.max_attempted_updates);
      worst_esc = std::max(worst_esc, run.escape_events / r.max_escape_events);
    }
  }
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "largest fraction of cap used: successful %.2e, attempted %.2e, escapes %.2e",
                worst_succ, worst_att, worst_esc);
  report(4, "hard bounds", pass, detail);
}

void monotonicity_criterion(const Batch& grid1, const Batch& grid2) {
  bool pass = true;
  std::int64_t q_violations = 0;
  std::int64_t unexplained = 0;
  int qualifying = 0;
  for (const Batch* b : {&grid1, &grid2}) {
    for (const auto& run : b->records) {
      q_violations += run.monotonicity_violations;
      unexplained += run.unexplained_value_increases;
      if (b == &grid1 && run.plain_selections == 0) {
        ++qualifying;
        pass &= run.value_increases == 0;
      }
    }
  }
  pass &= q_violations == 0 && unexplained == 0;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "Q violations %lld, value rises after a global-optimal or into a saddle "
                "selection %lld, grid1 runs with only optimal/saddle stage games %d",
                static_cast<long long>(q_violations), static_cast<long long>(unexplained),
                qualifying);
  report(5, "monotonicity", pass, detail);
}

void optimism_criterion(const Batch& grid1) {
  std::int64_t violations = 0;
  std::int64_t checks = 0;
  for (const auto& run : grid1.records) {
    violations += run.optimism_violations;
    checks += run.optimism_checks;
  }
  const double fraction = checks > 0 ? static_cast<double>(violations) / checks : 1.0;
  char detail[256];
  std::snprintf(detail, sizeof(detail), "%lld of %lld checks below Q* (fraction %.2e)",
                static_cast<long long>(violations), static_cast<long long>(checks), fraction);
  report(6, "optimism", checks > 0 && fraction <= kOptimismMaxFraction, detail);
}

void stage_solver_criterion() {
  Rng rng(20261016);
  int exactness_failures = 0;
  int grid_failures = 0;
  int pure_failures = 0;
  int class_failures = 0;
  int grid_checked = 0;
  int equilibria = 0;
  for (int k = 0; k < kStageGames; ++k) {
    const int cols = k % 2 == 0 ? 2 : 3;
    const Matrix a = testing::random_int_matrix(2, cols, -kPayoffRange, kPayoffRange, rng);
    const Matrix b = testing::random_int_matrix(2, cols, -kPayoffRange, kPayoffRange, rng);
    const BimatrixGame game(a, b);
    const SupportEnumerationResult found = support_enumeration_equilibria(game);
    if (found.equilibria.empty()) ++exactness_failures;

    bool degenerate = found.degenerate || testing::has_payoff_ties(a, b);
    for (const auto& eq : found.equilibria) {
      ++equilibria;
      if (testing::brute_gains(a, b, eq.strategy_1, eq.strategy_2).max() > kBestResponseCheck) {
        ++exactness_failures;
      }
      const int br_1 = testing::best_response_count(a, eq.strategy_2, 1e-9);
      const int br_2 = testing::best_response_count(b.transpose(), eq.strategy_1, 1e-9);
      if (br_1 > testing::support_size(eq.strategy_1) ||
          br_2 > testing::support_size(eq.strategy_2)) {
        degenerate = true;
      }
    }

    // Pure profiles: the solver's pure equilibria are exactly the pure grid
    // points that are epsilon-equilibria, and classification follows the
    // definitions.
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < cols; ++j) {
        const Vector x = Vector::Unit(2, i);
        const Vector y = Vector::Unit(cols, j);
        const bool grid_eq = testing::brute_gains(a, b, x, y).max() <= kGridEpsilon;
        const EquilibriumProfile* hit = nullptr;
        for (const auto& eq : found.equilibria) {
          if (testing::linf(eq.strategy_1, x) < 1e-12 && testing::linf(eq.strategy_2, y) < 1e-12) {
            hit = &eq;
          }
        }
        if (grid_eq != (hit != nullptr)) ++pure_failures;
        if (hit == nullptr) continue;
        const EquilibriumClass klass = classify_equilibrium(game, *hit);
        const bool go = testing::brute_global_optimal(a, b, i, j);
        const bool saddle = testing::brute_saddle(a, b, i, j);
        const EquilibriumClass expected = go       ? EquilibriumClass::kGlobalOptimal
                                          : saddle ? EquilibriumClass::kSaddle
                                                   : EquilibriumClass::kPlain;
        if (klass != expected) ++class_failures;
      }
    }

    // Every grid epsilon-equilibrium lies near a returned equilibrium. In
    // degenerate games the equilibria form continua that support enumeration
    // only reports by their extreme points, so those are skipped here.
    if (degenerate) continue;
    ++grid_checked;
    const auto points = testing::grid_equilibria(a, b, kGridResolution, kGridEpsilon);
    for (const auto& p : points) {
      double best = 1e300;
      for (const auto& eq : found.equilibria) {
        best = std::min(best, std::max(testing::linf(p.x, eq.strategy_1),
                                       testing::linf(p.y, eq.strategy_2)));
      }
      if (best > kGridMatchDistance) {
        ++grid_failures;
        break;
      }
    }
  }
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "%d games, %d equilibria, exactness failures %d, pure mismatches %d, class "
                "mismatches %d, grid mismatches %d over %d non-degenerate games",
                kStageGames, equilibria, exactness_failures, pure_failures, class_failures,
                grid_failures, grid_checked);
  report(7, "stage solver", exactness_failures == 0 && pure_failures == 0 && class_failures == 0 &&
                                grid_failures == 0 && grid_checked > kStageGames / 2,
         detail);
}

void known_game_criterion(const Batch& grid1) {
  const GameModel& model = grid1.setup.model;
  const int np = model.num_profiles();
  Rng rng(8080);
  bool exact = true;
  double worst = -1e300;
  double lowest = 1e300;
  for (int k = 0; k < kKnownSamples; ++k) {
    KnownSet known(static_cast<std::size_t>(model.num_states()) * np);
    const double density = rng.uniform();
    for (std::size_t i = 0; i < known.size(); ++i) known[i] = rng.uniform() < density;
    QTables q = QTables::constant(model, 0.0);
    for (int i = 0; i < kNumPlayers; ++i) {
      q.q[i] = RowMajorMatrix::NullaryExpr(model.num_states(), np,
                                           [&] { return rng.uniform() * model.v_max(); });
    }
    const GameModel mk = build_known_game(model, known, q);
    for (StateIndex s = 0; s < model.num_states(); ++s) {
      exact &= mk.is_terminal(s) == model.is_terminal(s);
      if (model.is_terminal(s)) continue;
      for (int p = 0; p < np; ++p) {
        const auto o = mk.outcomes(s, p);
        if (!known[s * np + p]) {
          exact &= o.size() == 1 && o[0].next >= model.num_states() && o[0].prob == 1.0;
          continue;
        }
        const auto ref = model.outcomes(s, p);
        exact &= o.size() == ref.size();
        for (std::size_t j = 0; j < std::min(o.size(), ref.size()); ++j) {
          exact &= o[j].next == ref[j].next && o[j].prob == ref[j].prob;
        }
        exact &= mk.reward(0, s, p) == model.reward(0, s, p);
        exact &= mk.reward(1, s, p) == model.reward(1, s, p);
      }
    }
    JointPolicy policy;
    for (StateIndex s = 0; s < mk.num_states(); ++s) {
      for (int i = 0; i < kNumPlayers; ++i) {
        Vector x = Vector::NullaryExpr(4, [&] { return rng.uniform(); });
        if (rng.uniform() < 0.5) x = Vector::Unit(4, rng.index(4));
        policy.strategy[i].push_back(x / x.sum());
      }
    }
    const PolicyValues values = policy_evaluation(mk, policy, 1e-12);
    for (int i = 0; i < kNumPlayers; ++i) {
      worst = std::max(worst, values.v[i].maxCoeff());
      lowest = std::min(lowest, values.v[i].minCoeff());
    }
  }
  const double cap = 2.0 * model.v_max() + kKnownValueSlack;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "%d samples, known dynamics bit-exact %s, values in [%.4f, %.4f], cap %.4f",
                kKnownSamples, exact ? "yes" : "no", lowest, worst, cap);
  report(8, "known game", exact && worst <= cap && lowest >= -kKnownValueSlack, detail);
}

void truncation_criterion(const Batch& grid1) {
  const GameModel& model = grid1.setup.model;
  const int horizon = h_step_horizon(0.8, kTruncationEpsilon);
  const JointPolicy& policy = grid1.setup.oracle.policy;
  const PolicyValues full = policy_evaluation(model, policy, 1e-13);
  const auto truncated = h_step_values(model, policy, horizon);
  double gap = 0.0;
  for (int i = 0; i < kNumPlayers; ++i) {
    gap = std::max(gap, (full.v[i] - truncated[i]).lpNorm<Eigen::Infinity>());
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail), "H %d, largest |v - v_H| %.3g", horizon, gap);
  report(9, "truncation", horizon == kExpectedHorizon && gap <= kTruncationEpsilon, detail);
}

void bounds_report_criterion(const Batch& grid1) {
  const BoundsReport& r = grid1.setup.bounds;
  const double sa = 72.0 * 16.0;
  const double eps1 = 0.2 * 0.06 / 3.0;
  const double kappa = sa / (0.2 * eps1);
  const double m_star = std::log(6.0 * sa * (1.0 + 2.0 * kappa) / 0.1) / (2.0 * eps1 * eps1 * 0.04);
  bool pass = std::abs(r.params.epsilon_1 - 0.004) <= 1e-15;
  pass &= std::abs(r.kappa / kKappa - 1.0) <= kKappaRelTol;
  pass &= std::abs(r.theoretical_m / kTheoreticalM - 1.0) <= kTheoreticalMRelTol;
  pass &= std::abs(r.theoretical_m / m_star - 1.0) <= 1e-12;
  pass &= std::abs(r.zeta / ((2.0 + 4.0 * 50) * kappa) - 1.0) <= 1e-12;
  pass &= std::abs(r.zeta_theoretical / ((2.0 + 4.0 * m_star) * kappa) - 1.0) <= 1e-12;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "epsilon_1 %.4g, kappa %.4g, theoretical m %.4g (%.3g x the m = 50 used), "
                "zeta %.4g at m = 50 and %.4g at theoretical m, sample bound %.3g",
                r.params.epsilon_1, r.kappa, r.theoretical_m, r.theoretical_m / 50.0, r.zeta,
                r.zeta_theoretical, r.sample_bound);
  report(10, "bounds report", pass, detail);
}

}  // namespace
}  // namespace dnq

int main() {
  using namespace dnq;
  const Batch grid1 = run_game("grid1");
  const Batch grid2 = run_game("grid2");
  convergence_criterion(1, "grid1 batch", grid1, kGrid1ReferenceSteps);
  convergence_criterion(2, "grid2 batch", grid2, kGrid2ReferenceSteps);
  oracle_criterion(grid1);
  bounds_criterion({&grid1, &grid2});
  monotonicity_criterion(grid1, grid2);
  optimism_criterion(grid1);
  stage_solver_criterion();
  known_game_criterion(grid1);
  truncation_criterion(grid1);
  bounds_report_criterion(grid1);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
