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

#include "dnq/learners.hpp"

#include <algorithm>

namespace dnq {
namespace {

EquilibriumProfile terminal_profile(const GameModel& model) {
  EquilibriumProfile eq;
  eq.strategy_1 = Vector::Unit(model.num_actions_1(), 0);
  eq.strategy_2 = Vector::Unit(model.num_actions_2(), 0);
  return eq;
}

}  // namespace

ActionProfile sample_profile(const EquilibriumProfile& eq, Rng& rng) {
  const int a1 = sample_index(eq.strategy_1, rng);
  const int a2 = sample_index(eq.strategy_2, rng);
  return {a1, a2};
}

StageCache::StageCache(const GameModel& model, QTables& tables, SelectionRule rule)
    : model_(&model), tables_(&tables), rule_(rule), profiles_(model.num_states()) {
  refresh_all();
  policy_version_ = 0;
  stats_ = {};
}

void StageCache::refresh(StateIndex s) {
  if (model_->is_terminal(s)) {
    profiles_[s] = terminal_profile(*model_);
    tables_->v[0][s] = 0.0;
    tables_->v[1][s] = 0.0;
    return;
  }
  EquilibriumProfile eq = select_equilibrium(
      tables_->stage_game(s, model_->num_actions_1(), model_->num_actions_2()), rule_);
  ++stats_.solves;
  if (eq.klass == EquilibriumClass::kPlain) ++stats_.plain_selections;
  const EquilibriumProfile& old = profiles_[s];
  const double rise = std::max(eq.value_1 - tables_->v[0][s], eq.value_2 - tables_->v[1][s]);
  if (rise > 1e-12) ++stats_.value_increases;
  if (rise > 10.0 * kClassifyTol && old.strategy_1.size() != 0 &&
      (old.klass == EquilibriumClass::kGlobalOptimal || eq.klass == EquilibriumClass::kSaddle)) {
    ++stats_.unexplained_value_increases;
  }
  if (old.strategy_1.size() == 0 || old.strategy_1 != eq.strategy_1 ||
      old.strategy_2 != eq.strategy_2) {
    ++policy_version_;
  }
  tables_->v[0][s] = eq.value_1;
  tables_->v[1][s] = eq.value_2;
  profiles_[s] = std::move(eq);
}

void StageCache::refresh_all() {
  for (StateIndex s = 0; s < model_->num_states(); ++s) refresh(s);
}

JointPolicy StageCache::policy() const {
  JointPolicy policy;
  for (const auto& eq : profiles_) {
    policy.strategy[0].push_back(eq.strategy_1);
    policy.strategy[1].push_back(eq.strategy_2);
  }
  return policy;
}

DelayedNashQLearner::DelayedNashQLearner(const GameModel& model, DelayedParams params)
    : model_(&model),
      params_(params),
      tables_(QTables::constant(model, model.v_max())),
      cache_(model, tables_, params.selection) {
  if (params.m < 1) throw InvalidGame("m must be positive");
  if (!(params.epsilon_1 > 0.0)) throw InvalidGame("epsilon_1 must be positive");
  const std::size_t n = static_cast<std::size_t>(model.num_states()) * model.num_profiles();
  for (int i = 0; i < kNumPlayers; ++i) {
    u_[i].assign(n, 0.0);
    l_[i].assign(n, 0);
    b_[i].assign(n, 0);
    learn_[i].assign(n, 1);
  }
}

GreedyChoice DelayedNashQLearner::greedy_profile(StateIndex s, Rng& rng) const {
  if (model_->is_terminal(s)) throw TerminalState("no action in a terminal state");
  const EquilibriumProfile& eq = cache_.at(s);
  return {sample_profile(eq, rng), {eq.value_1, eq.value_2}};
}

StepEvents DelayedNashQLearner::observe(TimeStep t, StateIndex s, ActionIndex a1, ActionIndex a2,
                                        double r1, double r2, StateIndex next) {
  const int p = model_->profile_index(a1, a2);
  const std::size_t k = slot(s, p);
  const double gamma = model_->gamma();
  // Both targets use the stage values at the start of the step.
  const std::array<double, kNumPlayers> target = {r1 + gamma * cache_.value(0, next),
                                                  r2 + gamma * cache_.value(1, next)};

  StepEvents ev;
  ev.chosen_profile = {a1, a2};
  ev.stage_values = {cache_.value(0, s), cache_.value(1, s)};
  for (int i = 0; i < kNumPlayers; ++i) {
    if (b_[i][k] <= t_star_) learn_[i][k] = 1;
    if (!learn_[i][k]) continue;
    if (l_[i][k] == 0) b_[i][k] = t;
    ++l_[i][k];
    u_[i][k] += target[i];
    if (l_[i][k] != params_.m) continue;

    double& q = tables_.q[i](s, p);
    UpdateAttempt attempt{i, s, p, false, q, q};
    const double mean = u_[i][k] / params_.m;
    if (q - mean >= 2.0 * params_.epsilon_1) {
      q = mean + params_.epsilon_1;
      t_star_ = t;
      attempt.success = true;
      attempt.q_after = q;
      ev.q_changed = true;
    } else if (b_[i][k] > t_star_) {
      learn_[i][k] = 0;
    }
    u_[i][k] = 0.0;
    l_[i][k] = 0;
    ev.attempts.push_back(attempt);
  }
  if (ev.q_changed) cache_.refresh(s);
  return ev;
}

void DelayedNashQLearner::set_q(int player, StateIndex s, int profile, double value) {
  tables_.q[player](s, profile) = value;
  cache_.refresh(s);
}

NashQLearner::NashQLearner(const GameModel& model, NashQParams params)
    : model_(&model),
      params_(params),
      tables_(QTables::constant(model, params.initial_q)),
      cache_(model, tables_, params.selection),
      visits_(static_cast<std::size_t>(model.num_states()) * model.num_profiles(), 0) {
  if (params.exploration_rate < 0.0 || params.exploration_rate > 1.0) {
    throw InvalidGame("exploration rate must lie in [0, 1]");
  }
}

ActionProfile NashQLearner::choose(StateIndex s, Rng& rng) {
  if (model_->is_terminal(s)) throw TerminalState("no action in a terminal state");
  if (params_.exploration_rate > 0.0 && rng.uniform() < params_.exploration_rate) {
    const int a1 = rng.index(model_->num_actions_1());
    const int a2 = rng.index(model_->num_actions_2());
    return {a1, a2};
  }
  return sample_profile(cache_.at(s), rng);
}

StepEvents NashQLearner::observe(TimeStep /*t*/, StateIndex s, ActionIndex a1, ActionIndex a2,
                                 double r1, double r2, StateIndex next) {
  const int p = model_->profile_index(a1, a2);
  auto& n = visits_[static_cast<std::size_t>(s) * model_->num_profiles() + p];
  ++n;
  const double alpha = 1.0 / static_cast<double>(n);
  const double gamma = model_->gamma();
  const std::array<double, kNumPlayers> target = {r1 + gamma * cache_.value(0, next),
                                                  r2 + gamma * cache_.value(1, next)};

  StepEvents ev;
  ev.chosen_profile = {a1, a2};
  ev.stage_values = {cache_.value(0, s), cache_.value(1, s)};
  for (int i = 0; i < kNumPlayers; ++i) {
    double& q = tables_.q[i](s, p);
    const double updated = (1.0 - alpha) * q + alpha * target[i];
    if (updated != q) ev.q_changed = true;
    q = updated;
  }
  if (ev.q_changed) cache_.refresh(s);
  return ev;
}

}  // namespace dnq
