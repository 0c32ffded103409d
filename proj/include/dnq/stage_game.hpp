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

#ifndef DNQ_STAGE_GAME_HPP_
#define DNQ_STAGE_GAME_HPP_

#include <iosfwd>
#include <string_view>
#include <utility>
#include <vector>

#include "dnq/core.hpp"

namespace dnq {

inline constexpr double kBestResponseTol = 1e-9;
inline constexpr double kClassifyTol = 1e-7;

// Two-player normal-form game; payoff_1(a1, a2) and payoff_2(a1, a2).
class BimatrixGame {
 public:
  BimatrixGame(Matrix payoff_1, Matrix payoff_2);

  template <typename D1, typename D2>
  static BimatrixGame from(const Eigen::MatrixBase<D1>& p1, const Eigen::MatrixBase<D2>& p2) {
    return BimatrixGame(Matrix(p1), Matrix(p2));
  }

  const Matrix& payoff_1() const { return payoff_1_; }
  const Matrix& payoff_2() const { return payoff_2_; }
  int rows() const { return static_cast<int>(payoff_1_.rows()); }
  int cols() const { return static_cast<int>(payoff_1_.cols()); }

 private:
  Matrix payoff_1_;
  Matrix payoff_2_;
};

using MixedStrategy = Vector;

bool is_mixed_strategy(const MixedStrategy& probs, double tol = 1e-12);

enum class EquilibriumClass { kGlobalOptimal, kSaddle, kPlain };

std::string_view to_string(EquilibriumClass klass);

struct EquilibriumProfile {
  MixedStrategy strategy_1;
  MixedStrategy strategy_2;
  double value_1 = 0.0;
  double value_2 = 0.0;
  EquilibriumClass klass = EquilibriumClass::kPlain;
};

struct SupportEnumerationResult {
  std::vector<EquilibriumProfile> equilibria;
  // Set when at least one support pair produced a singular indifference system.
  bool degenerate = false;
  int skipped_supports = 0;
};

// Largest gain either player can obtain by a pure unilateral deviation.
std::pair<double, double> deviation_gains(const BimatrixGame& game, const MixedStrategy& x,
                                          const MixedStrategy& y);

EquilibriumProfile make_profile(const BimatrixGame& game, MixedStrategy x, MixedStrategy y);

std::vector<EquilibriumProfile> enumerate_pure_equilibria(const BimatrixGame& game,
                                                          double tol = kBestResponseTol);

// Equal-size support enumeration. Profiles come out ordered by support size,
// then by (row support, column support) lexicographically; size-one supports
// reproduce enumerate_pure_equilibria exactly. max_support <= 0 means
// min(rows, cols).
SupportEnumerationResult support_enumeration_equilibria(const BimatrixGame& game,
                                                        int max_support = 0,
                                                        double tol = kBestResponseTol);

EquilibriumClass classify_equilibrium(const BimatrixGame& game, const EquilibriumProfile& eq,
                                      double tol = kClassifyTol);

// How select_equilibrium picks among several equilibria.
//   kClassOrder:   first global optimum, else first saddle, else first plain.
//   kClassWelfare: same class order, highest v1 + v2 within the class.
//   kWelfare:      first global optimum, else highest v1 + v2 overall.
// Near-ties (1e-9) always keep enumeration order. Under either class-ordered
// rule Nash value iteration on grid1 cycles: states like (1,5) carry a
// self-loop saddle worth gamma * v(s), which is only an equilibrium while
// v(s) is large.
enum class SelectionRule { kClassOrder, kClassWelfare, kWelfare };

inline constexpr SelectionRule kDefaultSelection = SelectionRule::kWelfare;

std::string_view to_string(SelectionRule rule);
SelectionRule parse_selection_rule(std::string_view name);

// Nash / argNash operator used by the learners and the oracle. Throws
// NoEquilibriumFound when enumeration comes back empty.
EquilibriumProfile select_equilibrium(const BimatrixGame& game,
                                      SelectionRule rule = kDefaultSelection,
                                      double tol = kClassifyTol);

// Text form: `rows cols`, then rows x cols entries of payoff_1 and the same
// for payoff_2, whitespace separated. `#` starts a comment. Throws ParseError.
BimatrixGame parse_stage_game(std::istream& in);

}  // namespace dnq

#endif  // DNQ_STAGE_GAME_HPP_
