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

#ifndef DNQ_NASH_ORACLE_HPP_
#define DNQ_NASH_ORACLE_HPP_

#include <array>
#include <iosfwd>
#include <vector>

#include "dnq/markov_game.hpp"

namespace dnq {

struct OracleResult {
  QTables q_star;  // v holds v*^i
  JointPolicy policy;  // argNash of q_star
  double residual = 0.0;  // sup-norm Nash-Bellman residual of q_star
  int iterations = 0;
  bool converged = false;
  // Non-terminal states whose selected equilibrium at q_star is neither
  // global-optimal nor a saddle.
  int plain_states = 0;
};

int default_oracle_iterations(double gamma, double tol);

struct OracleOptions {
  double tol = 1e-9;
  int max_iter = 0;  // <= 0 picks default_oracle_iterations
  SelectionRule selection = kDefaultSelection;
  double initial_q = 0.0;  // Q_0 on non-terminal rows
};

// Nash value iteration
//   Q_{k+1}(s, p) = R(s, p) + gamma sum_s' T(s, p, s') Nash(Q_k(s', :))
// until the residual is at most tol. A run that hits max_iter is returned
// with converged == false.
OracleResult nash_value_iteration(const GameModel& model, const OracleOptions& options = {});

// Solves every stage game of q and returns the selected strategies; terminal
// states get a point mass on action 0.
JointPolicy argnash_policy(const GameModel& model, const QTables& q,
                           SelectionRule rule = kDefaultSelection);

std::vector<bool> reachable_states(const GameModel& model, const JointPolicy& policy);

// Optimal values of `player` against the opponent's fixed stationary strategy.
Vector best_response_values(const GameModel& model, const JointPolicy& policy, int player,
                            double tol = 1e-12);

struct DeviationReport {
  std::array<double, kNumPlayers> max_gain{};
  std::vector<bool> reachable;
};

// Largest unilateral-deviation gain of each player over the states reachable
// from the initial state under the policy.
DeviationReport deviation_report(const GameModel& model, const JointPolicy& policy);

bool is_nash_profile(const GameModel& model, const JointPolicy& policy, double tol = 1e-6);

void write_q_csv(std::ostream& out, const GameModel& model, const QTables& q);
void write_v_csv(std::ostream& out, const GameModel& model, const QTables& q);

}  // namespace dnq

#endif  // DNQ_NASH_ORACLE_HPP_
