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

#ifndef DNQ_MARKOV_GAME_HPP_
#define DNQ_MARKOV_GAME_HPP_

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnq/core.hpp"
#include "dnq/stage_game.hpp"

namespace dnq {

// Players are indexed 0 and 1 throughout the library.
inline constexpr int kNumPlayers = 2;

struct Outcome {
  StateIndex next = 0;
  double prob = 0.0;
};

// A finite two-player Markov game with expected rewards R^i(s, a1, a2).
// Profiles (a1, a2) are flattened as a1 * |A2| + a2. Terminal states are
// absorbing with zero reward and value zero.
class GameModel {
 public:
  GameModel(int num_states, int num_actions_1, int num_actions_2, double gamma,
            StateIndex initial);

  int num_states() const { return num_states_; }
  int num_actions_1() const { return num_actions_1_; }
  int num_actions_2() const { return num_actions_2_; }
  int num_profiles() const { return num_actions_1_ * num_actions_2_; }
  double gamma() const { return gamma_; }
  double v_max() const { return 1.0 / (1.0 - gamma_); }
  StateIndex initial() const { return initial_; }

  int profile_index(ActionIndex a1, ActionIndex a2) const { return a1 * num_actions_2_ + a2; }
  ActionProfile profile_actions(int profile) const {
    return {profile / num_actions_2_, profile % num_actions_2_};
  }

  bool is_terminal(StateIndex s) const { return terminal_[s]; }
  // Marks s terminal and installs its zero-reward self-loop.
  void set_terminal(StateIndex s);

  void set_profile(StateIndex s, int profile, std::vector<Outcome> outcomes, double reward_1,
                   double reward_2);

  std::span<const Outcome> outcomes(StateIndex s, int profile) const {
    return outcomes_[slot(s, profile)];
  }
  double reward(int player, StateIndex s, int profile) const { return rewards_[player](s, profile); }
  const RowMajorMatrix& rewards(int player) const { return rewards_[player]; }

  // Checks row normalization, the terminal convention and, when requested,
  // that rewards lie in [0, 1]. Throws InvalidGame.
  void validate(bool unit_rewards = true) const;

  // Largest |sum_s' T(s, a, s') - 1| over all rows.
  double max_row_error() const;

  std::vector<std::string> state_labels;

 private:
  int slot(StateIndex s, int profile) const { return s * num_profiles() + profile; }

  int num_states_;
  int num_actions_1_;
  int num_actions_2_;
  double gamma_;
  StateIndex initial_;
  std::vector<bool> terminal_;
  std::vector<std::vector<Outcome>> outcomes_;
  std::array<RowMajorMatrix, kNumPlayers> rewards_;
};

// Per-player estimates Q^i(s, a1, a2) (rows are states, columns profiles)
// together with the derived stage values v^i(s).
struct QTables {
  std::array<RowMajorMatrix, kNumPlayers> q;
  std::array<Vector, kNumPlayers> v;

  static QTables constant(const GameModel& model, double value);

  // The stage game (Q^1(s,:), Q^2(s,:)) reshaped to |A1| x |A2|.
  BimatrixGame stage_game(StateIndex s, int num_actions_1, int num_actions_2) const;
};

// Stationary mixed policy for both players; strategy[player][s].
struct JointPolicy {
  std::array<std::vector<MixedStrategy>, kNumPlayers> strategy;

  int num_states() const { return static_cast<int>(strategy[0].size()); }
  static JointPolicy pure(const GameModel& model, const std::vector<ActionProfile>& actions);
  static JointPolicy uniform(const GameModel& model);

  friend bool operator==(const JointPolicy& a, const JointPolicy& b);
};

// Pads a policy with point masses on action 0 for states it does not cover.
JointPolicy pad_policy(const JointPolicy& policy, const GameModel& model);

struct Transition {
  StateIndex next = 0;
  std::array<double, kNumPlayers> reward{};
};

Transition sample_transition(const GameModel& model, StateIndex s, ActionIndex a1,
                             ActionIndex a2, Rng& rng);

// R^i(s, p) + gamma * sum_s' T(s, p, s') values(s').
double bellman_target(const GameModel& model, const Vector& values, int player, StateIndex s,
                      int profile);

// Every profile not in `known` at a non-terminal state is routed to a fresh
// absorbing state that pays (1 - gamma) Q^i(s, a1, a2) forever. Known
// profiles and terminal states are copied unchanged. `known` is indexed
// s * |A1||A2| + profile. Synthetic states are appended after the originals
// in (s, profile) order.
using KnownSet = std::vector<bool>;
GameModel build_known_game(const GameModel& model, const KnownSet& known, const QTables& q);

struct PolicyValues {
  std::array<Vector, kNumPlayers> v;
  double residual = 0.0;
  int iterations = 0;
};

// Iterative evaluation of v^i = r_pi + gamma P_pi v^i. Throws NonConvergence
// when the cap ceil(ln(tol (1 - gamma)) / ln gamma) + 64 is exceeded.
PolicyValues policy_evaluation(const GameModel& model, const JointPolicy& policy,
                               double tol = 1e-9);

int evaluation_iteration_cap(double gamma, double tol);

// Expected discounted reward over steps 0..H (H + 1 terms), for all states.
std::array<Vector, kNumPlayers> h_step_values(const GameModel& model, const JointPolicy& policy,
                                              int horizon);
std::pair<double, double> h_step_value(const GameModel& model, const JointPolicy& policy,
                                       StateIndex s, int horizon);

// ceil((1 / (1 - gamma)) ln(1 / ((1 - gamma) epsilon))), clamped at zero.
int h_step_horizon(double gamma, double epsilon);

// Text format:
//   states N actions1 K1 actions2 K2 gamma G initial I terminals t1,t2,...
//   s a1 a2 s' prob r1 r2
// Rewards of a profile are averaged under the line probabilities.
GameModel parse_game_text(std::istream& in);
GameModel read_game_file(const std::string& path);
void write_game_text(std::ostream& out, const GameModel& model);

}  // namespace dnq

#endif  // DNQ_MARKOV_GAME_HPP_
