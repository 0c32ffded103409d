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

#include "dnq/stage_game.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>

namespace dnq {
namespace {

constexpr int kMaxSupport = 8;
constexpr double kWelfareTol = 1e-9;

using SmallMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxSupport + 1, kMaxSupport + 1>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxSupport + 1, 1>;
using Support = std::array<int, kMaxSupport>;

// Calls f(support) for every k-subset of {0..n-1} in lexicographic order.
template <typename F>
void for_each_subset(int n, int k, F&& f) {
  Support idx{};
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    f(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Finds the k-action mix (over columns c) that equalizes the opponent's
// payoff(r, c) across all rows r. Returns false when the system is singular.
template <typename Payoff>
bool solve_indifference(int k, Payoff&& payoff, SmallVector& mix) {
  SmallMatrix system = SmallMatrix::Zero(k + 1, k + 1);
  SmallVector rhs = SmallVector::Zero(k + 1);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) system(r, c) = payoff(r, c);
    system(r, k) = -1.0;
  }
  for (int c = 0; c < k; ++c) system(k, c) = 1.0;
  rhs(k) = 1.0;

  Eigen::FullPivLU<SmallMatrix> lu(system);
  lu.setThreshold(1e-10);
  if (lu.rank() < k + 1) return false;
  SmallVector sol = lu.solve(rhs);
  mix = sol.head(k);
  return true;
}

bool clean_support_mix(SmallVector& mix, double tol) {
  for (Eigen::Index i = 0; i < mix.size(); ++i) {
    if (!std::isfinite(mix[i]) || mix[i] < -tol) return false;
    if (mix[i] < 0.0) mix[i] = 0.0;
  }
  const double total = mix.sum();
  if (total <= 0.0) return false;
  mix /= total;
  return true;
}

bool same_profile(const EquilibriumProfile& a, const EquilibriumProfile& b) {
  return (a.strategy_1 - b.strategy_1).lpNorm<Eigen::Infinity>() <= 1e-9 &&
         (a.strategy_2 - b.strategy_2).lpNorm<Eigen::Infinity>() <= 1e-9;
}

}  // namespace

BimatrixGame::BimatrixGame(Matrix payoff_1, Matrix payoff_2)
    : payoff_1_(std::move(payoff_1)), payoff_2_(std::move(payoff_2)) {
  if (payoff_1_.rows() < 1 || payoff_1_.cols() < 1) {
    throw InvalidGame("bimatrix game needs at least one action per player");
  }
  if (payoff_1_.rows() != payoff_2_.rows() || payoff_1_.cols() != payoff_2_.cols()) {
    throw InvalidGame("payoff matrices differ in shape");
  }
  if (!payoff_1_.allFinite() || !payoff_2_.allFinite()) {
    throw InvalidGame("payoff entries must be finite");
  }
}

bool is_mixed_strategy(const MixedStrategy& probs, double tol) {
  if (probs.size() == 0) return false;
  if ((probs.array() < 0.0).any()) return false;
  return std::abs(probs.sum() - 1.0) <= tol;
}

std::string_view to_string(EquilibriumClass klass) {
  switch (klass) {
    case EquilibriumClass::kGlobalOptimal:
      return "global_optimal";
    case EquilibriumClass::kSaddle:
      return "saddle";
    case EquilibriumClass::kPlain:
      return "plain";
  }
  return "unknown";
}

std::pair<double, double> deviation_gains(const BimatrixGame& game, const MixedStrategy& x,
                                          const MixedStrategy& y) {
  const Vector row_payoffs = game.payoff_1() * y;
  const Vector col_payoffs = game.payoff_2().transpose() * x;
  const double v1 = x.dot(row_payoffs);
  const double v2 = y.dot(col_payoffs);
  return {row_payoffs.maxCoeff() - v1, col_payoffs.maxCoeff() - v2};
}

EquilibriumProfile make_profile(const BimatrixGame& game, MixedStrategy x, MixedStrategy y) {
  EquilibriumProfile eq;
  eq.value_1 = x.dot(game.payoff_1() * y);
  eq.value_2 = x.dot(game.payoff_2() * y);
  eq.strategy_1 = std::move(x);
  eq.strategy_2 = std::move(y);
  return eq;
}

std::vector<EquilibriumProfile> enumerate_pure_equilibria(const BimatrixGame& game, double tol) {
  const Matrix& a = game.payoff_1();
  const Matrix& b = game.payoff_2();
  const Eigen::RowVectorXd col_max_1 = a.colwise().maxCoeff();
  const Vector row_max_2 = b.rowwise().maxCoeff();

  std::vector<EquilibriumProfile> out;
  for (int i = 0; i < game.rows(); ++i) {
    for (int j = 0; j < game.cols(); ++j) {
      if (a(i, j) >= col_max_1(j) - tol && b(i, j) >= row_max_2(i) - tol) {
        EquilibriumProfile eq;
        eq.strategy_1 = Vector::Unit(game.rows(), i);
        eq.strategy_2 = Vector::Unit(game.cols(), j);
        eq.value_1 = a(i, j);
        eq.value_2 = b(i, j);
        out.push_back(std::move(eq));
      }
    }
  }
  return out;
}

SupportEnumerationResult support_enumeration_equilibria(const BimatrixGame& game,
                                                        int max_support, double tol) {
  const int n1 = game.rows();
  const int n2 = game.cols();
  const int limit = std::min(n1, n2);
  if (max_support <= 0) max_support = limit;
  if (max_support > limit) {
    throw InvalidGame("max_support exceeds the smaller action set");
  }
  if (max_support > kMaxSupport) {
    throw InvalidGame("support enumeration is limited to supports of size 8");
  }

  SupportEnumerationResult result;
  result.equilibria = enumerate_pure_equilibria(game, tol);

  const Matrix& a = game.payoff_1();
  const Matrix& b = game.payoff_2();
  SmallVector x_mix;
  SmallVector y_mix;
  for (int k = 2; k <= max_support; ++k) {
    for_each_subset(n1, k, [&](const Support& rows) {
      for_each_subset(n2, k, [&](const Support& cols) {
        // Column player's mix equalizes the row player's payoffs on `rows`.
        const bool y_ok = solve_indifference(
            k, [&](int r, int c) { return a(rows[r], cols[c]); }, y_mix);
        const bool x_ok = solve_indifference(
            k, [&](int r, int c) { return b(rows[c], cols[r]); }, x_mix);
        if (!x_ok || !y_ok) {
          result.degenerate = true;
          ++result.skipped_supports;
          return;
        }
        if (!clean_support_mix(x_mix, tol) || !clean_support_mix(y_mix, tol)) return;

        Vector x = Vector::Zero(n1);
        Vector y = Vector::Zero(n2);
        for (int r = 0; r < k; ++r) x[rows[r]] = x_mix[r];
        for (int c = 0; c < k; ++c) y[cols[c]] = y_mix[c];

        const auto [gain_1, gain_2] = deviation_gains(game, x, y);
        if (gain_1 > tol || gain_2 > tol) return;

        EquilibriumProfile eq = make_profile(game, std::move(x), std::move(y));
        for (const auto& seen : result.equilibria) {
          if (same_profile(seen, eq)) return;
        }
        result.equilibria.push_back(std::move(eq));
      });
    });
  }
  return result;
}

EquilibriumClass classify_equilibrium(const BimatrixGame& game, const EquilibriumProfile& eq,
                                      double tol) {
  const Matrix& a = game.payoff_1();
  const Matrix& b = game.payoff_2();
  if (eq.value_1 >= a.maxCoeff() - tol && eq.value_2 >= b.maxCoeff() - tol) {
    return EquilibriumClass::kGlobalOptimal;
  }
  // Opponent deviations must not hurt the non-deviating player.
  const Eigen::RowVectorXd p1_under_deviation = eq.strategy_1.transpose() * a;
  const Vector p2_under_deviation = b * eq.strategy_2;
  if (p1_under_deviation.minCoeff() >= eq.value_1 - tol &&
      p2_under_deviation.minCoeff() >= eq.value_2 - tol) {
    return EquilibriumClass::kSaddle;
  }
  return EquilibriumClass::kPlain;
}

std::string_view to_string(SelectionRule rule) {
  switch (rule) {
    case SelectionRule::kClassOrder:
      return "class_order";
    case SelectionRule::kClassWelfare:
      return "class_welfare";
    case SelectionRule::kWelfare:
      return "welfare";
  }
  return "unknown";
}

SelectionRule parse_selection_rule(std::string_view name) {
  for (SelectionRule rule :
       {SelectionRule::kClassOrder, SelectionRule::kClassWelfare, SelectionRule::kWelfare}) {
    if (name == to_string(rule)) return rule;
  }
  throw ConfigError("unknown selection rule: " + std::string(name));
}

EquilibriumProfile select_equilibrium(const BimatrixGame& game, SelectionRule rule, double tol) {
  // Pure profiles lead the enumeration order, so a pure global optimum is the
  // first global optimum of the full list as well.
  for (auto& eq : enumerate_pure_equilibria(game)) {
    eq.klass = classify_equilibrium(game, eq, tol);
    if (eq.klass == EquilibriumClass::kGlobalOptimal) return eq;
  }

  SupportEnumerationResult found = support_enumeration_equilibria(game);
  if (found.equilibria.empty()) {
    throw NoEquilibriumFound("support enumeration found no equilibrium");
  }
  const bool by_welfare = rule != SelectionRule::kClassOrder;
  const EquilibriumProfile* best[3] = {nullptr, nullptr, nullptr};
  for (auto& eq : found.equilibria) {
    eq.klass = classify_equilibrium(game, eq, tol);
    int tier = static_cast<int>(eq.klass);
    if (rule == SelectionRule::kWelfare && eq.klass == EquilibriumClass::kSaddle) {
      tier = static_cast<int>(EquilibriumClass::kPlain);
    }
    const EquilibriumProfile*& slot = best[tier];
    if (slot == nullptr ||
        (by_welfare &&
         eq.value_1 + eq.value_2 > slot->value_1 + slot->value_2 + kWelfareTol)) {
      slot = &eq;
    }
  }
  for (const auto* eq : best) {
    if (eq != nullptr) return *eq;
  }
  throw NoEquilibriumFound("support enumeration found no equilibrium");
}

BimatrixGame parse_stage_game(std::istream& in) {
  std::stringstream body;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    body << line << '\n';
  }
  int rows = 0;
  int cols = 0;
  if (!(body >> rows >> cols) || rows < 1 || cols < 1) {
    throw ParseError("stage game: expected positive dimensions");
  }
  Matrix payoff[2] = {Matrix(rows, cols), Matrix(rows, cols)};
  for (auto& m : payoff) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (!(body >> m(r, c))) throw ParseError("stage game: too few payoff entries");
      }
    }
  }
  std::string extra;
  if (body >> extra) throw ParseError("stage game: trailing input '" + extra + "'");
  try {
    return BimatrixGame(std::move(payoff[0]), std::move(payoff[1]));
  } catch (const InvalidGame& e) {
    throw ParseError(std::string("stage game: ") + e.what());
  }
}

}  // namespace dnq
