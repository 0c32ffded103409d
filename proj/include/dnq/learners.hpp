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

#ifndef DNQ_LEARNERS_HPP_
#define DNQ_LEARNERS_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "dnq/markov_game.hpp"
#include "dnq/stage_game.hpp"

namespace dnq {

using TimeStep = std::int64_t;

struct UpdateAttempt {
  int player = 0;
  StateIndex state = 0;
  int profile = 0;
  bool success = false;
  double q_before = 0.0;
  double q_after = 0.0;
};

struct StepEvents {
  std::vector<UpdateAttempt> attempts;  // at most one per player
  bool q_changed = false;
  ActionProfile chosen_profile;
  std::array<double, kNumPlayers> stage_values{};  // v^i(s) before the step's updates
};

// Running statistics over every stage game the cache has solved.
struct StageStats {
  std::int64_t solves = 0;
  std::int64_t plain_selections = 0;
  // Recomputations in which some v^i(s) went up.
  std::int64_t value_increases = 0;
  // Increases by more than the classification tolerance although the
  // previous selection was a global optimum or the new one is a saddle.
  // With non-increasing Q either condition rules an increase out.
  std::int64_t unexplained_value_increases = 0;
};

// Caches select_equilibrium per state and keeps QTables::v in sync. A state
// is re-solved only when its Q rows change. Terminal states have value 0.
class StageCache {
 public:
  StageCache(const GameModel& model, QTables& tables, SelectionRule rule);

  void refresh(StateIndex s);
  void refresh_all();

  const EquilibriumProfile& at(StateIndex s) const { return profiles_[s]; }
  double value(int player, StateIndex s) const { return tables_->v[player][s]; }

  // Bumped whenever some state's selected strategies change.
  std::uint64_t policy_version() const { return policy_version_; }
  const StageStats& stats() const { return stats_; }
  JointPolicy policy() const;

 private:
  const GameModel* model_;
  QTables* tables_;
  SelectionRule rule_;
  std::vector<EquilibriumProfile> profiles_;
  std::uint64_t policy_version_ = 0;
  StageStats stats_;
};

// Contract consumed by the experiment runner.
class Learner {
 public:
  Learner() = default;
  Learner(const Learner&) = delete;
  Learner& operator=(const Learner&) = delete;
  virtual ~Learner() = default;

  virtual ActionProfile choose(StateIndex s, Rng& rng) = 0;
  virtual StepEvents observe(TimeStep t, StateIndex s, ActionIndex a1, ActionIndex a2, double r1,
                             double r2, StateIndex next) = 0;

  virtual const QTables& tables() const = 0;
  QTables snapshot() const { return tables(); }

  // argNash of the current tables at every state.
  virtual JointPolicy greedy_policy() const = 0;
  virtual std::uint64_t policy_version() const = 0;
  virtual const StageStats& stage_stats() const = 0;
};

struct GreedyChoice {
  ActionProfile profile;
  std::array<double, kNumPlayers> stage_values{};
};

struct DelayedParams {
  int m = 50;
  double epsilon_1 = 0.004;
  SelectionRule selection = kDefaultSelection;
};

// Delayed Nash Q-learning. One instance holds both players' tables; with
// shared observations and a deterministic equilibrium selection the two
// players' copies would be identical.
class DelayedNashQLearner final : public Learner {
 public:
  DelayedNashQLearner(const GameModel& model, DelayedParams params);

  GreedyChoice greedy_profile(StateIndex s, Rng& rng) const;

  ActionProfile choose(StateIndex s, Rng& rng) override { return greedy_profile(s, rng).profile; }
  StepEvents observe(TimeStep t, StateIndex s, ActionIndex a1, ActionIndex a2, double r1,
                     double r2, StateIndex next) override;

  const QTables& tables() const override { return tables_; }
  JointPolicy greedy_policy() const override { return cache_.policy(); }
  std::uint64_t policy_version() const override { return cache_.policy_version(); }
  const StageStats& stage_stats() const override { return cache_.stats(); }

  const DelayedParams& params() const { return params_; }
  double accumulator(int player, StateIndex s, int profile) const { return u_[player][slot(s, profile)]; }
  int sample_count(int player, StateIndex s, int profile) const { return l_[player][slot(s, profile)]; }
  TimeStep window_start(int player, StateIndex s, int profile) const { return b_[player][slot(s, profile)]; }
  bool learning(int player, StateIndex s, int profile) const { return learn_[player][slot(s, profile)]; }
  TimeStep last_success() const { return t_star_; }

  // Overwrites one estimate and re-solves the state's stage game.
  void set_q(int player, StateIndex s, int profile, double value);

 private:
  std::size_t slot(StateIndex s, int profile) const {
    return static_cast<std::size_t>(s) * model_->num_profiles() + profile;
  }

  const GameModel* model_;
  DelayedParams params_;
  QTables tables_;
  StageCache cache_;
  std::array<std::vector<double>, kNumPlayers> u_;
  std::array<std::vector<int>, kNumPlayers> l_;
  std::array<std::vector<TimeStep>, kNumPlayers> b_;
  std::array<std::vector<char>, kNumPlayers> learn_;
  TimeStep t_star_ = 0;
};

struct NashQParams {
  double exploration_rate = 0.1;
  double initial_q = 0.0;
  SelectionRule selection = kDefaultSelection;
};

// Classic Nash Q-learning baseline: alpha = 1 / visits, epsilon-greedy
// behaviour around the argNash profile.
class NashQLearner final : public Learner {
 public:
  NashQLearner(const GameModel& model, NashQParams params);

  ActionProfile choose(StateIndex s, Rng& rng) override;
  StepEvents observe(TimeStep t, StateIndex s, ActionIndex a1, ActionIndex a2, double r1,
                     double r2, StateIndex next) override;

  const QTables& tables() const override { return tables_; }
  JointPolicy greedy_policy() const override { return cache_.policy(); }
  std::uint64_t policy_version() const override { return cache_.policy_version(); }
  const StageStats& stage_stats() const override { return cache_.stats(); }

  std::int64_t visits(StateIndex s, int profile) const {
    return visits_[static_cast<std::size_t>(s) * model_->num_profiles() + profile];
  }

 private:
  const GameModel* model_;
  NashQParams params_;
  QTables tables_;
  StageCache cache_;
  std::vector<std::int64_t> visits_;
};

// Samples each player's action from a stage equilibrium.
ActionProfile sample_profile(const EquilibriumProfile& eq, Rng& rng);

}  // namespace dnq

#endif  // DNQ_LEARNERS_HPP_
