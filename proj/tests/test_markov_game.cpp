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


#include <gtest/gtest.h>

#include <Eigen/LU>

#include <cmath>
#include <sstream>

#include "dnq/markov_game.hpp"

namespace dnq {
namespace {

// Random game with states 0..n-2 live and n-1 terminal.
GameModel random_model(int n, int a1, int a2, double gamma, Rng& rng) {
  GameModel model(n, a1, a2, gamma, 0);
  model.set_terminal(n - 1);
  for (StateIndex s = 0; s + 1 < n; ++s) {
    for (int p = 0; p < a1 * a2; ++p) {
      std::vector<Outcome> row;
      double total = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double w = rng.uniform() + 0.01;
        row.push_back({rng.index(n), w});
        total += w;
      }
      for (auto& o : row) o.prob /= total;
      model.set_profile(s, p, row, rng.uniform(), rng.uniform());
    }
  }
  model.validate();
  return model;
}

JointPolicy random_policy(const GameModel& model, Rng& rng) {
  JointPolicy policy;
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    Vector x = Vector::NullaryExpr(model.num_actions_1(), [&] { return rng.uniform(); });
    Vector y = Vector::NullaryExpr(model.num_actions_2(), [&] { return rng.uniform(); });
    policy.strategy[0].push_back(x / x.sum());
    policy.strategy[1].push_back(y / y.sum());
  }
  return policy;
}

// Solves (I - gamma P) v = r directly.
Vector linear_solve_values(const GameModel& model, const JointPolicy& policy, int player) {
  const int n = model.num_states();
  Matrix system = Matrix::Identity(n, n);
  Vector rhs = Vector::Zero(n);
  for (StateIndex s = 0; s < n; ++s) {
    if (model.is_terminal(s)) continue;
    for (int a1 = 0; a1 < model.num_actions_1(); ++a1) {
      for (int a2 = 0; a2 < model.num_actions_2(); ++a2) {
        const double w = policy.strategy[0][s][a1] * policy.strategy[1][s][a2];
        const int p = model.profile_index(a1, a2);
        rhs[s] += w * model.reward(player, s, p);
        for (const auto& o : model.outcomes(s, p)) {
          system(s, o.next) -= model.gamma() * w * o.prob;
        }
      }
    }
  }
  return system.partialPivLu().solve(rhs);
}

TEST(MarkovGame, ProfileIndexRoundTrips) {
  GameModel model(2, 3, 4, 0.9, 0);
  for (int p = 0; p < model.num_profiles(); ++p) {
    const auto a = model.profile_actions(p);
    EXPECT_EQ(model.profile_index(a.a1, a.a2), p);
  }
  EXPECT_DOUBLE_EQ(model.v_max(), 10.0);
}

TEST(MarkovGame, ValidateRejectsBadRows) {
  GameModel model(2, 1, 1, 0.5, 0);
  model.set_terminal(1);
  model.set_profile(0, 0, {{1, 0.5}}, 0.0, 0.0);
  EXPECT_THROW(model.validate(), InvalidGame);
  model.set_profile(0, 0, {{1, 1.0}}, 1.5, 0.0);
  EXPECT_THROW(model.validate(), InvalidGame);
  EXPECT_NO_THROW(model.validate(false));
  EXPECT_THROW(model.set_profile(0, 0, {{2, 1.0}}, 0.0, 0.0), InvalidGame);
}

TEST(MarkovGame, SamplingMatchesTransitionProbabilities) {
  GameModel model(3, 1, 1, 0.5, 0);
  model.set_terminal(2);
  model.set_profile(0, 0, {{1, 0.3}, {2, 0.7}}, 0.25, 0.75);
  model.set_profile(1, 0, {{2, 1.0}}, 0.0, 0.0);
  Rng rng(3);
  const int n = 200000;
  int hits = 0;
  for (int k = 0; k < n; ++k) {
    const Transition t = sample_transition(model, 0, 0, 0, rng);
    hits += t.next == 1;
    ASSERT_EQ(t.reward[0], 0.25);
    ASSERT_EQ(t.reward[1], 0.75);
  }
  // Five standard errors.
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.3, 5.0 * std::sqrt(0.21 / n));
  EXPECT_THROW(sample_transition(model, 2, 0, 0, rng), TerminalState);
}

TEST(MarkovGame, BellmanTargetByHand) {
  GameModel model(3, 1, 2, 0.5, 0);
  model.set_terminal(2);
  model.set_profile(0, 1, {{1, 0.25}, {2, 0.75}}, 0.5, 0.1);
  Vector v(3);
  v << 9.0, 4.0, 0.0;
  EXPECT_DOUBLE_EQ(bellman_target(model, v, 0, 0, 1), 0.5 + 0.5 * 0.25 * 4.0);
  EXPECT_DOUBLE_EQ(bellman_target(model, v, 1, 0, 1), 0.1 + 0.5 * 0.25 * 4.0);
}

TEST(MarkovGame, PolicyEvaluationMatchesLinearSolve) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const GameModel model = random_model(6, 2, 3, 0.9, rng);
    const JointPolicy policy = random_policy(model, rng);
    const PolicyValues values = policy_evaluation(model, policy, 1e-12);
    for (int i = 0; i < kNumPlayers; ++i) {
      const Vector exact = linear_solve_values(model, policy, i);
      EXPECT_LE((values.v[i] - exact).lpNorm<Eigen::Infinity>(), 1e-9);
    }
  }
}

TEST(MarkovGame, PolicyEvaluationReportsNonConvergence) {
  // The iteration cap assumes rewards in [0, 1]; values near 1e10 cannot be
  // resolved to 1e-9 at all.
  GameModel model(1, 1, 1, 0.9, 0);
  model.set_profile(0, 0, {{0, 1.0}}, 1e9, 1e9);
  try {
    policy_evaluation(model, JointPolicy::uniform(model), 1e-9);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(MarkovGame, HorizonValues) {
  EXPECT_EQ(h_step_horizon(0.8, 0.06), 23);
  EXPECT_EQ(h_step_horizon(0.5, 1.0), 2);
  EXPECT_EQ(h_step_horizon(0.0, 0.5), 1);
}

TEST(MarkovGame, TruncatedValues) {
  Rng rng(9);
  const GameModel model = random_model(5, 2, 2, 0.8, rng);
  const JointPolicy policy = random_policy(model, rng);
  const auto zero = h_step_values(model, policy, 0);
  for (StateIndex s = 0; s + 1 < model.num_states(); ++s) {
    double r = 0.0;
    for (int a1 = 0; a1 < 2; ++a1) {
      for (int a2 = 0; a2 < 2; ++a2) {
        r += policy.strategy[0][s][a1] * policy.strategy[1][s][a2] *
             model.reward(0, s, model.profile_index(a1, a2));
      }
    }
    EXPECT_NEAR(zero[0][s], r, 1e-15);
  }
  const Vector exact = linear_solve_values(model, policy, 0);
  for (int h : {0, 5, 23}) {
    const auto vh = h_step_values(model, policy, h);
    const double tail = std::pow(0.8, h + 1) / 0.2;
    EXPECT_LE((exact - vh[0]).lpNorm<Eigen::Infinity>(), tail + 1e-12);
    EXPECT_LE(vh[0].maxCoeff(), exact.maxCoeff() + 1e-12);  // rewards are non-negative
  }
  const auto single = h_step_value(model, policy, 0, 7);
  EXPECT_DOUBLE_EQ(single.first, h_step_values(model, policy, 7)[0][0]);
}

TEST(MarkovGame, KnownGameWithEverythingKnownIsIdentical) {
  Rng rng(21);
  const GameModel model = random_model(5, 2, 2, 0.7, rng);
  const QTables q = QTables::constant(model, 1.0);
  const KnownSet all(model.num_states() * model.num_profiles(), true);
  const GameModel mk = build_known_game(model, all, q);
  ASSERT_EQ(mk.num_states(), model.num_states());
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    EXPECT_EQ(mk.is_terminal(s), model.is_terminal(s));
    for (int p = 0; p < model.num_profiles(); ++p) {
      const auto a = model.outcomes(s, p);
      const auto b = mk.outcomes(s, p);
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].next, b[k].next);
        EXPECT_EQ(a[k].prob, b[k].prob);
      }
      EXPECT_EQ(mk.reward(0, s, p), model.reward(0, s, p));
    }
  }
  EXPECT_THROW(build_known_game(model, KnownSet(3, true), q), InvalidGame);
}

TEST(MarkovGame, UnknownProfileFreezesAtItsEstimate) {
  GameModel model(2, 1, 2, 0.8, 0);
  model.set_terminal(1);
  model.set_profile(0, 0, {{1, 1.0}}, 1.0, 0.0);
  model.set_profile(0, 1, {{1, 1.0}}, 0.0, 1.0);
  QTables q = QTables::constant(model, 0.0);
  q.q[0](0, 1) = 3.0;
  q.q[1](0, 1) = 4.5;
  KnownSet known = {true, false, true, true};
  const GameModel mk = build_known_game(model, known, q);
  ASSERT_EQ(mk.num_states(), 3);
  EXPECT_EQ(mk.outcomes(0, 1)[0].next, 2);
  EXPECT_DOUBLE_EQ(mk.reward(0, 2, 0), 0.2 * 3.0);
  // Playing the unknown profile forever is worth exactly its estimate.
  const JointPolicy stay = JointPolicy::pure(mk, {{0, 1}, {0, 0}, {0, 0}});
  const PolicyValues v = policy_evaluation(mk, stay, 1e-13);
  EXPECT_NEAR(v.v[0][0], 3.0, 1e-10);
  EXPECT_NEAR(v.v[1][0], 4.5, 1e-10);
  const JointPolicy padded = pad_policy(JointPolicy::uniform(model), mk);
  EXPECT_EQ(padded.num_states(), 3);
}

TEST(MarkovGame, TextRoundTrip) {
  Rng rng(33);
  const GameModel model = random_model(4, 2, 2, 0.75, rng);
  std::stringstream buf;
  write_game_text(buf, model);
  const GameModel back = parse_game_text(buf);
  ASSERT_EQ(back.num_states(), model.num_states());
  EXPECT_EQ(back.gamma(), model.gamma());
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    EXPECT_EQ(back.is_terminal(s), model.is_terminal(s));
    for (int p = 0; p < model.num_profiles(); ++p) {
      EXPECT_NEAR(back.reward(1, s, p), model.reward(1, s, p), 1e-15);
      Vector a = Vector::Zero(4);
      Vector b = Vector::Zero(4);
      for (const auto& o : model.outcomes(s, p)) a[o.next] += o.prob;
      for (const auto& o : back.outcomes(s, p)) b[o.next] += o.prob;
      EXPECT_LE((a - b).lpNorm<Eigen::Infinity>(), 1e-15);
    }
  }
}

TEST(MarkovGame, ParseErrors) {
  for (const char* text :
       {"", "states 2 actions1 1 actions2 1 gamma 0.5 initial 0\n",
        "states 2 actions1 1 actions2 1 gamma 0.5 initial 0 terminals 1\n0 0 0 1 0.5 0 0\n",
        "states 2 actions1 1 actions2 1 gamma 0.5 initial 0 terminals 1\n0 0 0 7 1 0 0\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parse_game_text(in), Error) << text;
  }
  EXPECT_THROW(read_game_file("/nonexistent/game.txt"), ParseError);
}

}  // namespace
}  // namespace dnq
