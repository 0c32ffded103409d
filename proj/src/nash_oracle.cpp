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

#include "dnq/nash_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

namespace dnq {
namespace {

struct StageSolution {
  std::array<Vector, kNumPlayers> v;
  JointPolicy policy;
  int plain_states = 0;
};

StageSolution solve_stages(const GameModel& model, const QTables& q, SelectionRule rule) {
  const int n = model.num_states();
  StageSolution out;
  out.v = {Vector::Zero(n), Vector::Zero(n)};
  for (StateIndex s = 0; s < n; ++s) {
    if (model.is_terminal(s)) {
      out.policy.strategy[0].push_back(Vector::Unit(model.num_actions_1(), 0));
      out.policy.strategy[1].push_back(Vector::Unit(model.num_actions_2(), 0));
      continue;
    }
    EquilibriumProfile eq =
        select_equilibrium(q.stage_game(s, model.num_actions_1(), model.num_actions_2()), rule);
    if (eq.klass == EquilibriumClass::kPlain) ++out.plain_states;
    out.v[0][s] = eq.value_1;
    out.v[1][s] = eq.value_2;
    out.policy.strategy[0].push_back(std::move(eq.strategy_1));
    out.policy.strategy[1].push_back(std::move(eq.strategy_2));
  }
  return out;
}

// Q'(s, p) = R(s, p) + gamma sum T v; terminal rows stay zero.
QTables backup(const GameModel& model, const std::array<Vector, kNumPlayers>& v) {
  QTables next = QTables::constant(model, 0.0);
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    if (model.is_terminal(s)) continue;
    for (int p = 0; p < model.num_profiles(); ++p) {
      for (int i = 0; i < kNumPlayers; ++i) next.q[i](s, p) = bellman_target(model, v[i], i, s, p);
    }
  }
  return next;
}

}  // namespace

int default_oracle_iterations(double gamma, double tol) {
  if (gamma <= 0.0) return 10;
  return 10 * static_cast<int>(std::ceil(std::log(tol * (1.0 - gamma)) / std::log(gamma)));
}

OracleResult nash_value_iteration(const GameModel& model, const OracleOptions& options) {
  const double tol = options.tol;
  const int max_iter =
      options.max_iter > 0 ? options.max_iter : default_oracle_iterations(model.gamma(), tol);

  OracleResult result;
  QTables q = QTables::constant(model, options.initial_q);
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    if (!model.is_terminal(s)) continue;
    for (int i = 0; i < kNumPlayers; ++i) q.q[i].row(s).setZero();
  }
  StageSolution stages = solve_stages(model, q, options.selection);
  for (int it = 0;; ++it) {
    QTables next = backup(model, stages.v);
    double residual = 0.0;
    for (int i = 0; i < kNumPlayers; ++i) {
      residual = std::max(residual, (next.q[i] - q.q[i]).cwiseAbs().maxCoeff());
    }
    result.residual = residual;
    result.iterations = it;
    if (residual <= tol) {
      result.converged = true;
      break;
    }
    if (it >= max_iter) break;
    q = std::move(next);
    stages = solve_stages(model, q, options.selection);
  }
  q.v = stages.v;
  result.q_star = std::move(q);
  result.policy = std::move(stages.policy);
  result.plain_states = stages.plain_states;
  return result;
}

JointPolicy argnash_policy(const GameModel& model, const QTables& q, SelectionRule rule) {
  return solve_stages(model, q, rule).policy;
}

std::vector<bool> reachable_states(const GameModel& model, const JointPolicy& policy) {
  std::vector<bool> seen(model.num_states(), false);
  std::deque<StateIndex> frontier{model.initial()};
  seen[model.initial()] = true;
  while (!frontier.empty()) {
    const StateIndex s = frontier.front();
    frontier.pop_front();
    if (model.is_terminal(s)) continue;
    for (ActionIndex a1 = 0; a1 < model.num_actions_1(); ++a1) {
      if (policy.strategy[0][s][a1] <= 0.0) continue;
      for (ActionIndex a2 = 0; a2 < model.num_actions_2(); ++a2) {
        if (policy.strategy[1][s][a2] <= 0.0) continue;
        for (const auto& o : model.outcomes(s, model.profile_index(a1, a2))) {
          if (o.prob > 0.0 && !seen[o.next]) {
            seen[o.next] = true;
            frontier.push_back(o.next);
          }
        }
      }
    }
  }
  return seen;
}

Vector best_response_values(const GameModel& model, const JointPolicy& policy, int player,
                            double tol) {
  const int n = model.num_states();
  const int own_actions = player == 0 ? model.num_actions_1() : model.num_actions_2();
  const int other_actions = player == 0 ? model.num_actions_2() : model.num_actions_1();
  const int cap = evaluation_iteration_cap(model.gamma(), tol);
  Vector v = Vector::Zero(n);
  Vector next = Vector::Zero(n);
  for (int it = 0;; ++it) {
    for (StateIndex s = 0; s < n; ++s) {
      if (model.is_terminal(s)) continue;
      const MixedStrategy& other = policy.strategy[1 - player][s];
      double best = -std::numeric_limits<double>::infinity();
      for (ActionIndex own = 0; own < own_actions; ++own) {
        double value = 0.0;
        for (ActionIndex opp = 0; opp < other_actions; ++opp) {
          if (other[opp] <= 0.0) continue;
          const int p = player == 0 ? model.profile_index(own, opp) : model.profile_index(opp, own);
          value += other[opp] * bellman_target(model, v, player, s, p);
        }
        best = std::max(best, value);
      }
      next[s] = best;
    }
    const double residual = (next - v).lpNorm<Eigen::Infinity>();
    v.swap(next);
    if (residual <= tol) break;
    if (it > cap) throw NonConvergence("best-response iteration did not converge", residual);
  }
  return v;
}

DeviationReport deviation_report(const GameModel& model, const JointPolicy& policy) {
  DeviationReport report;
  report.reachable = reachable_states(model, policy);
  const PolicyValues values = policy_evaluation(model, policy, 1e-12);
  for (int i = 0; i < kNumPlayers; ++i) {
    const Vector best = best_response_values(model, policy, i);
    double gain = 0.0;
    for (StateIndex s = 0; s < model.num_states(); ++s) {
      if (report.reachable[s]) gain = std::max(gain, best[s] - values.v[i][s]);
    }
    report.max_gain[i] = gain;
  }
  return report;
}

bool is_nash_profile(const GameModel& model, const JointPolicy& policy, double tol) {
  const DeviationReport report = deviation_report(model, policy);
  return report.max_gain[0] <= tol && report.max_gain[1] <= tol;
}

void write_q_csv(std::ostream& out, const GameModel& model, const QTables& q) {
  out << "s,a1,a2,q1,q2\n";
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    for (int p = 0; p < model.num_profiles(); ++p) {
      const auto [a1, a2] = model.profile_actions(p);
      out << s << ',' << a1 << ',' << a2 << ',' << format_double(q.q[0](s, p)) << ','
          << format_double(q.q[1](s, p)) << '\n';
    }
  }
}

void write_v_csv(std::ostream& out, const GameModel& model, const QTables& q) {
  out << "s,v1,v2\n";
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    out << s << ',' << format_double(q.v[0][s]) << ',' << format_double(q.v[1][s]) << '\n';
  }
}

}  // namespace dnq
