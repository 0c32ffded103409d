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

#include "dnq/markov_game.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace dnq {
namespace {

constexpr double kRowTol = 1e-12;

void merge_outcomes(std::vector<Outcome>& outcomes) {
  std::sort(outcomes.begin(), outcomes.end(),
            [](const Outcome& a, const Outcome& b) { return a.next < b.next; });
  std::vector<Outcome> merged;
  for (const auto& o : outcomes) {
    if (o.prob == 0.0) continue;
    if (!merged.empty() && merged.back().next == o.next) {
      merged.back().prob += o.prob;
    } else {
      merged.push_back(o);
    }
  }
  outcomes = std::move(merged);
}

// The Markov chain a joint policy induces: expected per-state rewards and
// successor distributions. Terminal states have neither.
struct PolicyChain {
  std::array<Vector, kNumPlayers> reward;
  std::vector<std::vector<Outcome>> next;
};

PolicyChain make_chain(const GameModel& model, const JointPolicy& policy) {
  if (policy.num_states() < model.num_states() ||
      static_cast<int>(policy.strategy[1].size()) < model.num_states()) {
    throw InvalidGame("policy does not cover every state of the model");
  }
  const int n = model.num_states();
  PolicyChain chain;
  chain.reward = {Vector::Zero(n), Vector::Zero(n)};
  chain.next.resize(n);
  for (StateIndex s = 0; s < n; ++s) {
    if (model.is_terminal(s)) continue;
    const MixedStrategy& x = policy.strategy[0][s];
    const MixedStrategy& y = policy.strategy[1][s];
    if (x.size() != model.num_actions_1() || y.size() != model.num_actions_2()) {
      throw InvalidGame("policy strategy has the wrong number of actions");
    }
    auto& succ = chain.next[s];
    for (ActionIndex a1 = 0; a1 < model.num_actions_1(); ++a1) {
      if (x[a1] <= 0.0) continue;
      for (ActionIndex a2 = 0; a2 < model.num_actions_2(); ++a2) {
        const double w = x[a1] * y[a2];
        if (w <= 0.0) continue;
        const int p = model.profile_index(a1, a2);
        for (int i = 0; i < kNumPlayers; ++i) chain.reward[i][s] += w * model.reward(i, s, p);
        for (const auto& o : model.outcomes(s, p)) succ.push_back({o.next, w * o.prob});
      }
    }
    merge_outcomes(succ);
  }
  return chain;
}

void chain_backup(const PolicyChain& chain, double gamma, const Vector& v, Vector& out,
                  int player) {
  for (Eigen::Index s = 0; s < v.size(); ++s) {
    double acc = 0.0;
    for (const auto& o : chain.next[s]) acc += o.prob * v[o.next];
    out[s] = chain.reward[player][s] + gamma * acc;
  }
}

}  // namespace

GameModel::GameModel(int num_states, int num_actions_1, int num_actions_2, double gamma,
                     StateIndex initial)
    : num_states_(num_states),
      num_actions_1_(num_actions_1),
      num_actions_2_(num_actions_2),
      gamma_(gamma),
      initial_(initial) {
  if (num_states < 1 || num_actions_1 < 1 || num_actions_2 < 1) {
    throw InvalidGame("game needs at least one state and one action per player");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidGame("discount must lie in [0, 1)");
  if (initial < 0 || initial >= num_states) throw InvalidGame("initial state out of range");
  terminal_.assign(num_states, false);
  outcomes_.resize(static_cast<std::size_t>(num_states) * num_profiles());
  for (auto& r : rewards_) r = RowMajorMatrix::Zero(num_states, num_profiles());
}

void GameModel::set_terminal(StateIndex s) {
  terminal_[s] = true;
  for (int p = 0; p < num_profiles(); ++p) set_profile(s, p, {{s, 1.0}}, 0.0, 0.0);
}

void GameModel::set_profile(StateIndex s, int profile, std::vector<Outcome> outcomes,
                            double reward_1, double reward_2) {
  if (s < 0 || s >= num_states_ || profile < 0 || profile >= num_profiles()) {
    throw InvalidGame("profile out of range");
  }
  for (const auto& o : outcomes) {
    if (o.next < 0 || o.next >= num_states_) throw InvalidGame("successor out of range");
  }
  merge_outcomes(outcomes);
  outcomes_[slot(s, profile)] = std::move(outcomes);
  rewards_[0](s, profile) = reward_1;
  rewards_[1](s, profile) = reward_2;
}

double GameModel::max_row_error() const {
  double worst = 0.0;
  for (const auto& row : outcomes_) {
    double total = 0.0;
    for (const auto& o : row) total += o.prob;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

void GameModel::validate(bool unit_rewards) const {
  for (StateIndex s = 0; s < num_states_; ++s) {
    for (int p = 0; p < num_profiles(); ++p) {
      const auto& row = outcomes_[slot(s, p)];
      double total = 0.0;
      for (const auto& o : row) {
        if (!(o.prob >= 0.0)) throw InvalidGame("negative transition probability");
        total += o.prob;
      }
      if (std::abs(total - 1.0) > kRowTol) {
        throw InvalidGame("transition row of state " + std::to_string(s) + " sums to " +
                          std::to_string(total));
      }
      for (int i = 0; i < kNumPlayers; ++i) {
        const double r = rewards_[i](s, p);
        if (!std::isfinite(r)) throw InvalidGame("non-finite reward");
        if (unit_rewards && (r < 0.0 || r > 1.0)) throw InvalidGame("reward outside [0, 1]");
      }
      if (terminal_[s]) {
        if (row.size() != 1 || row[0].next != s || rewards_[0](s, p) != 0.0 ||
            rewards_[1](s, p) != 0.0) {
          throw InvalidGame("terminal state " + std::to_string(s) +
                            " must self-loop with zero reward");
        }
      }
    }
  }
}

QTables QTables::constant(const GameModel& model, double value) {
  QTables t;
  for (int i = 0; i < kNumPlayers; ++i) {
    t.q[i] = RowMajorMatrix::Constant(model.num_states(), model.num_profiles(), value);
    t.v[i] = Vector::Constant(model.num_states(), value);
  }
  return t;
}

BimatrixGame QTables::stage_game(StateIndex s, int num_actions_1, int num_actions_2) const {
  using Map = Eigen::Map<const RowMajorMatrix>;
  return BimatrixGame::from(Map(q[0].row(s).data(), num_actions_1, num_actions_2),
                            Map(q[1].row(s).data(), num_actions_1, num_actions_2));
}

JointPolicy JointPolicy::pure(const GameModel& model, const std::vector<ActionProfile>& actions) {
  JointPolicy policy;
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    const ActionProfile a = s < static_cast<int>(actions.size()) ? actions[s] : ActionProfile{};
    policy.strategy[0].push_back(Vector::Unit(model.num_actions_1(), a.a1));
    policy.strategy[1].push_back(Vector::Unit(model.num_actions_2(), a.a2));
  }
  return policy;
}

JointPolicy JointPolicy::uniform(const GameModel& model) {
  JointPolicy policy;
  const int n1 = model.num_actions_1();
  const int n2 = model.num_actions_2();
  policy.strategy[0].assign(model.num_states(), Vector::Constant(n1, 1.0 / n1));
  policy.strategy[1].assign(model.num_states(), Vector::Constant(n2, 1.0 / n2));
  return policy;
}

bool operator==(const JointPolicy& a, const JointPolicy& b) {
  for (int i = 0; i < kNumPlayers; ++i) {
    if (a.strategy[i].size() != b.strategy[i].size()) return false;
    for (std::size_t s = 0; s < a.strategy[i].size(); ++s) {
      if (a.strategy[i][s].size() != b.strategy[i][s].size() ||
          a.strategy[i][s] != b.strategy[i][s]) {
        return false;
      }
    }
  }
  return true;
}

JointPolicy pad_policy(const JointPolicy& policy, const GameModel& model) {
  JointPolicy out = policy;
  for (int s = policy.num_states(); s < model.num_states(); ++s) {
    out.strategy[0].push_back(Vector::Unit(model.num_actions_1(), 0));
    out.strategy[1].push_back(Vector::Unit(model.num_actions_2(), 0));
  }
  return out;
}

Transition sample_transition(const GameModel& model, StateIndex s, ActionIndex a1,
                             ActionIndex a2, Rng& rng) {
  if (model.is_terminal(s)) {
    throw TerminalState("cannot act in terminal state " + std::to_string(s));
  }
  const int p = model.profile_index(a1, a2);
  const auto outcomes = model.outcomes(s, p);
  Transition t;
  t.reward = {model.reward(0, s, p), model.reward(1, s, p)};
  const double u = rng.uniform();
  double acc = 0.0;
  t.next = outcomes.back().next;
  for (const auto& o : outcomes) {
    acc += o.prob;
    if (u < acc) {
      t.next = o.next;
      break;
    }
  }
  return t;
}

double bellman_target(const GameModel& model, const Vector& values, int player, StateIndex s,
                      int profile) {
  double acc = 0.0;
  for (const auto& o : model.outcomes(s, profile)) acc += o.prob * values[o.next];
  return model.reward(player, s, profile) + model.gamma() * acc;
}

GameModel build_known_game(const GameModel& model, const KnownSet& known, const QTables& q) {
  const int np = model.num_profiles();
  const int n = model.num_states();
  if (static_cast<int>(known.size()) != n * np) {
    throw InvalidGame("known set does not match the model's profile count");
  }
  std::vector<std::pair<StateIndex, int>> unknown;
  for (StateIndex s = 0; s < n; ++s) {
    if (model.is_terminal(s)) continue;
    for (int p = 0; p < np; ++p) {
      if (!known[s * np + p]) unknown.emplace_back(s, p);
    }
  }

  const double scale = 1.0 - model.gamma();
  GameModel out(n + static_cast<int>(unknown.size()), model.num_actions_1(),
                model.num_actions_2(), model.gamma(), model.initial());
  for (StateIndex s = 0; s < n; ++s) {
    if (model.is_terminal(s)) {
      out.set_terminal(s);
      continue;
    }
    for (int p = 0; p < np; ++p) {
      const auto o = model.outcomes(s, p);
      out.set_profile(s, p, std::vector<Outcome>(o.begin(), o.end()), model.reward(0, s, p),
                      model.reward(1, s, p));
    }
  }
  for (std::size_t k = 0; k < unknown.size(); ++k) {
    const auto [s, p] = unknown[k];
    const StateIndex z = n + static_cast<StateIndex>(k);
    const double r1 = scale * q.q[0](s, p);
    const double r2 = scale * q.q[1](s, p);
    out.set_profile(s, p, {{z, 1.0}}, r1, r2);
    for (int zp = 0; zp < np; ++zp) out.set_profile(z, zp, {{z, 1.0}}, r1, r2);
  }
  if (!model.state_labels.empty()) {
    out.state_labels = model.state_labels;
    for (const auto& [s, p] : unknown) {
      out.state_labels.push_back("z(" + model.state_labels[s] + "," + std::to_string(p) + ")");
    }
  }
  return out;
}

int evaluation_iteration_cap(double gamma, double tol) {
  if (gamma <= 0.0) return 65;
  return static_cast<int>(std::ceil(std::log(tol * (1.0 - gamma)) / std::log(gamma))) + 64;
}

PolicyValues policy_evaluation(const GameModel& model, const JointPolicy& policy, double tol) {
  const PolicyChain chain = make_chain(model, policy);
  const int n = model.num_states();
  const int cap = evaluation_iteration_cap(model.gamma(), tol);

  PolicyValues result;
  Vector next(n);
  for (int i = 0; i < kNumPlayers; ++i) {
    Vector v = Vector::Zero(n);
    int it = 0;
    double residual = 0.0;
    while (true) {
      chain_backup(chain, model.gamma(), v, next, i);
      residual = (next - v).lpNorm<Eigen::Infinity>();
      if (residual <= tol) break;
      if (++it > cap) {
        throw NonConvergence("policy evaluation did not reach tolerance", residual);
      }
      v.swap(next);
    }
    result.v[i] = std::move(v);
    result.residual = std::max(result.residual, residual);
    result.iterations = std::max(result.iterations, it);
  }
  return result;
}

std::array<Vector, kNumPlayers> h_step_values(const GameModel& model, const JointPolicy& policy,
                                              int horizon) {
  const PolicyChain chain = make_chain(model, policy);
  std::array<Vector, kNumPlayers> out;
  Vector next(model.num_states());
  for (int i = 0; i < kNumPlayers; ++i) {
    Vector v = chain.reward[i];
    for (int k = 0; k < horizon; ++k) {
      chain_backup(chain, model.gamma(), v, next, i);
      v.swap(next);
    }
    out[i] = std::move(v);
  }
  return out;
}

std::pair<double, double> h_step_value(const GameModel& model, const JointPolicy& policy,
                                       StateIndex s, int horizon) {
  const auto v = h_step_values(model, policy, horizon);
  return {v[0][s], v[1][s]};
}

int h_step_horizon(double gamma, double epsilon) {
  const double h = (1.0 / (1.0 - gamma)) * std::log(1.0 / ((1.0 - gamma) * epsilon));
  return h <= 0.0 ? 0 : static_cast<int>(std::ceil(h));
}

GameModel parse_game_text(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_line()) throw ParseError("game file is empty");
  std::map<std::string, std::string> header;
  {
    std::istringstream hs(line);
    std::string key;
    while (hs >> key) {
      std::string value;
      hs >> value;
      header[key] = value;
    }
  }
  auto require = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end() || it->second.empty()) {
      throw ParseError("game header is missing '" + key + "'");
    }
    return it->second;
  };
  int n = 0, k1 = 0, k2 = 0, initial = 0;
  double gamma = 0.0;
  try {
    n = std::stoi(require("states"));
    k1 = std::stoi(require("actions1"));
    k2 = std::stoi(require("actions2"));
    gamma = std::stod(require("gamma"));
    initial = std::stoi(require("initial"));
  } catch (const std::logic_error&) {
    throw ParseError("malformed numeric value in game header");
  }
  GameModel model(n, k1, k2, gamma, initial);

  std::vector<bool> terminal(n, false);
  if (auto it = header.find("terminals"); it != header.end() && !it->second.empty() &&
                                          it->second != "-") {
    std::istringstream ts(it->second);
    std::string item;
    while (std::getline(ts, item, ',')) {
      if (item.empty()) continue;
      const int t = std::stoi(item);
      if (t < 0 || t >= n) throw ParseError("terminal state out of range");
      terminal[t] = true;
    }
  }

  const int np = k1 * k2;
  std::vector<std::vector<Outcome>> rows(static_cast<std::size_t>(n) * np);
  std::vector<std::array<double, 2>> reward_mass(rows.size(), {0.0, 0.0});
  int line_no = 1;
  while (next_line()) {
    ++line_no;
    std::istringstream ls(line);
    int s, a1, a2, sn;
    double prob, r1, r2;
    if (!(ls >> s >> a1 >> a2 >> sn >> prob >> r1 >> r2)) {
      throw ParseError("malformed transition on line " + std::to_string(line_no));
    }
    if (s < 0 || s >= n || sn < 0 || sn >= n || a1 < 0 || a1 >= k1 || a2 < 0 || a2 >= k2) {
      throw ParseError("index out of range on line " + std::to_string(line_no));
    }
    if (prob < 0.0) throw ParseError("negative probability on line " + std::to_string(line_no));
    if (terminal[s]) {
      throw ParseError("transition listed for terminal state on line " + std::to_string(line_no));
    }
    const std::size_t slot = static_cast<std::size_t>(s) * np + a1 * k2 + a2;
    rows[slot].push_back({sn, prob});
    reward_mass[slot][0] += prob * r1;
    reward_mass[slot][1] += prob * r2;
  }

  for (StateIndex s = 0; s < n; ++s) {
    if (terminal[s]) {
      model.set_terminal(s);
      continue;
    }
    for (int p = 0; p < np; ++p) {
      const std::size_t slot = static_cast<std::size_t>(s) * np + p;
      double total = 0.0;
      for (const auto& o : rows[slot]) total += o.prob;
      if (std::abs(total - 1.0) > 1e-9) {
        throw ParseError("probabilities of state " + std::to_string(s) + " profile " +
                         std::to_string(p) + " sum to " + std::to_string(total));
      }
      for (auto& o : rows[slot]) o.prob /= total;
      model.set_profile(s, p, std::move(rows[slot]), reward_mass[slot][0] / total,
                        reward_mass[slot][1] / total);
    }
  }
  model.validate();
  return model;
}

GameModel read_game_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open game file '" + path + "'");
  return parse_game_text(in);
}

void write_game_text(std::ostream& out, const GameModel& model) {
  out << std::setprecision(17);
  out << "states " << model.num_states() << " actions1 " << model.num_actions_1()
      << " actions2 " << model.num_actions_2() << " gamma " << model.gamma() << " initial "
      << model.initial() << " terminals ";
  bool first = true;
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    if (!model.is_terminal(s)) continue;
    out << (first ? "" : ",") << s;
    first = false;
  }
  if (first) out << '-';
  out << '\n';
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    if (model.is_terminal(s)) continue;
    for (int p = 0; p < model.num_profiles(); ++p) {
      const auto [a1, a2] = model.profile_actions(p);
      for (const auto& o : model.outcomes(s, p)) {
        out << s << ' ' << a1 << ' ' << a2 << ' ' << o.next << ' ' << o.prob << ' '
            << model.reward(0, s, p) << ' ' << model.reward(1, s, p) << '\n';
      }
    }
  }
}

}  // namespace dnq
