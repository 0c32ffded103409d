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


#include "dnq/pac_monitor.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

namespace dnq {
namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string(name) + " must be positive");
  }
}

// zeta / (epsilon (1 - gamma)^2) ln(1 / delta) ln(1 / (epsilon (1 - gamma)))
double sample_bound(double zeta, const PacParams& p) {
  const double scale = 1.0 - p.gamma;
  return zeta / (p.epsilon * scale * scale) * std::log(1.0 / p.delta) *
         std::log(1.0 / (p.epsilon * scale));
}

}  // namespace

PacParams PacParams::from_epsilon(double epsilon, double delta, int m, double gamma,
                                  EpsilonMode mode) {
  PacParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.m = m;
  p.gamma = gamma;
  p.epsilon_1 = mode == EpsilonMode::kTheorem ? (1.0 - gamma) * epsilon / 3.0 : epsilon;
  return p;
}

BoundsReport compute_bounds(const PacParams& params, const GameDims& dims) {
  require_positive(params.epsilon, "epsilon");
  require_positive(params.epsilon_1, "epsilon_1");
  require_positive(params.delta, "delta");
  require_positive(static_cast<double>(params.m), "m");
  require_positive(dims.profiles(), "profile count");
  if (!(params.gamma > 0.0 && params.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (params.delta >= 1.0) throw ConfigError("delta must lie in (0, 1)");

  BoundsReport r;
  r.params = params;
  r.dims = dims;
  const double scale = 1.0 - params.gamma;
  const double sa = dims.profiles();
  r.v_max = 1.0 / scale;
  r.kappa = sa / (scale * params.epsilon_1);
  r.horizon = h_step_horizon(params.gamma, params.epsilon);
  r.zeta = 2.0 * r.kappa + 4.0 * params.m * r.kappa;
  r.sample_bound = sample_bound(r.zeta, params);
  r.theoretical_m = std::log(6.0 * sa * (1.0 + 2.0 * r.kappa) / params.delta) /
                    (2.0 * params.epsilon_1 * params.epsilon_1 * scale * scale);
  r.zeta_theoretical = 2.0 * r.kappa + 4.0 * r.theoretical_m * r.kappa;
  r.sample_bound_theoretical = sample_bound(r.zeta_theoretical, params);
  r.max_successful_updates = 2.0 * r.kappa;
  r.max_attempted_updates = 2.0 * sa * (1.0 + 2.0 * r.kappa);
  r.max_escape_events = 4.0 * params.m * r.kappa;
  // The slack keeps exact ratios such as 1250 from rounding down to 1249.
  r.per_entry_update_cap =
      static_cast<std::int64_t>(std::floor(1.0 / (params.epsilon_1 * scale) + 1e-9));
  return r;
}

void write_bounds_report(std::ostream& out, const BoundsReport& r) {
  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << std::setprecision(10);
  out << "states " << r.dims.states << "\n"
      << "actions_1 " << r.dims.actions_1 << "\n"
      << "actions_2 " << r.dims.actions_2 << "\n"
      << "gamma " << r.params.gamma << "\n"
      << "epsilon " << r.params.epsilon << "\n"
      << "epsilon_1 " << r.params.epsilon_1 << "\n"
      << "delta " << r.params.delta << "\n"
      << "m " << r.params.m << "\n"
      << "v_max " << r.v_max << "\n"
      << "kappa " << r.kappa << "\n"
      << "horizon " << r.horizon << "\n"
      << "zeta " << r.zeta << "\n"
      << "sample_bound " << r.sample_bound << "\n"
      << "theoretical_m " << r.theoretical_m << "\n"
      << "zeta_theoretical_m " << r.zeta_theoretical << "\n"
      << "sample_bound_theoretical_m " << r.sample_bound_theoretical << "\n"
      << "m_gap " << r.theoretical_m / r.params.m << "\n"
      << "max_successful_updates " << r.max_successful_updates << "\n"
      << "max_attempted_updates " << r.max_attempted_updates << "\n"
      << "max_escape_events " << r.max_escape_events << "\n"
      << "per_entry_update_cap " << r.per_entry_update_cap << "\n";
  out.flags(old_flags);
  out.precision(old_precision);
}

bool known_set_membership(const GameModel& model, const QTables& q, StateIndex s, int profile,
                          double epsilon_1) {
  if (model.is_terminal(s)) return true;
  for (int i = 0; i < kNumPlayers; ++i) {
    const double residual = q.q[i](s, profile) - bellman_target(model, q.v[i], i, s, profile);
    if (residual > 3.0 * epsilon_1) return false;
  }
  return true;
}

KnownSet scan_known_set(const GameModel& model, const QTables& q, double epsilon_1) {
  const int np = model.num_profiles();
  KnownSet known(static_cast<std::size_t>(model.num_states()) * np);
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    for (int p = 0; p < np; ++p) known[s * np + p] = known_set_membership(model, q, s, p, epsilon_1);
  }
  return known;
}

void write_checkpoint_line(std::ostream& out, const CheckpointRecord& r) {
  out << r.t << ", " << r.optimism_violations << ", " << r.accuracy_violations << ", "
      << (r.eps4_ok ? 1 : 0) << ", " << r.known << ", " << r.successful << ", " << r.attempted
      << ", " << r.escapes << '\n';
}

void record_step(MonitorLog& log, const StepEvents& events, bool escaped,
                 const BoundsReport& bounds) {
  for (const auto& a : events.attempts) {
    ++log.attempted_updates;
    if (a.success) {
      ++log.successful_updates;
      if (a.q_after > a.q_before - bounds.params.epsilon_1 + 1e-12) ++log.monotonicity_violations;
    } else if (a.q_after != a.q_before) {
      ++log.monotonicity_violations;
    }
  }
  if (escaped) ++log.escape_events;

  if (log.successful_updates > bounds.max_successful_updates) {
    throw BoundViolation("successful updates exceed 2 kappa");
  }
  if (log.attempted_updates > bounds.max_attempted_updates) {
    throw BoundViolation("attempted updates exceed 2 |S||A1||A2| (1 + 2 kappa)");
  }
  if (log.escape_events > bounds.max_escape_events) {
    throw BoundViolation("escape events exceed 4 m kappa");
  }
}

PacMonitor::PacMonitor(const GameModel& model, const BoundsReport& bounds,
                       const OracleResult* oracle, const QTables& initial, AuditOptions options)
    : model_(&model),
      bounds_(bounds),
      oracle_(oracle != nullptr && oracle->converged ? oracle : nullptr),
      options_(options),
      known_(scan_known_set(model, initial, bounds.params.epsilon_1)),
      predecessors_(model.num_states()),
      last_q_(initial) {
  const int np = model.num_profiles();
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    if (model.is_terminal(s)) continue;
    for (int p = 0; p < np; ++p) {
      for (const auto& o : model.outcomes(s, p)) {
        if (o.prob > 0.0) predecessors_[o.next].push_back(s * np + p);
      }
    }
  }
  for (auto& counts : entry_updates_) counts.assign(known_.size(), 0);
}

int PacMonitor::known_count() const {
  return static_cast<int>(std::count(known_.begin(), known_.end(), true));
}

void PacMonitor::retest(const QTables& q, StateIndex s, int profile, StateIndex updated_s,
                        int updated_profile) {
  const std::size_t k = static_cast<std::size_t>(s) * model_->num_profiles() + profile;
  const bool now = known_set_membership(*model_, q, s, profile, bounds_.params.epsilon_1);
  if (now != known_[k]) {
    if (s != updated_s || profile != updated_profile) ++log_.indirect_known_changes;
    known_[k] = now;
  }
}

void PacMonitor::on_step(StateIndex s, int profile, const StepEvents& events, bool escaped,
                         const QTables& q) {
  record_step(log_, events, escaped, bounds_);
  if (!events.q_changed) return;

  const int np = model_->num_profiles();
  for (const auto& a : events.attempts) {
    if (!a.success) continue;
    const std::size_t k = static_cast<std::size_t>(a.state) * np + a.profile;
    if (++entry_updates_[a.player][k] > bounds_.per_entry_update_cap) {
      throw BoundViolation("a Q entry was updated more than 1 / (epsilon_1 (1 - gamma)) times");
    }
  }
  for (int p = 0; p < np; ++p) retest(q, s, p, s, profile);
  for (int slot : predecessors_[s]) retest(q, slot / np, slot % np, s, profile);
}

CheckpointRecord PacMonitor::checkpoint(TimeStep t, const QTables& q, const JointPolicy& policy,
                                        StateIndex current) {
  const GameModel& model = *model_;
  const int n = model.num_states();
  const int np = model.num_profiles();
  const double eps = bounds_.params.epsilon;

  CheckpointRecord rec;
  rec.t = t;
  rec.successful = log_.successful_updates;
  rec.attempted = log_.attempted_updates;
  rec.escapes = log_.escape_events;

  for (int i = 0; i < kNumPlayers; ++i) {
    if ((q.q[i].array() > last_q_.q[i].array()).any()) ++log_.monotonicity_violations;
  }
  last_q_ = q;

  const KnownSet scanned = scan_known_set(model, q, bounds_.params.epsilon_1);
  if (scanned != known_) {
    ++log_.known_set_mismatches;
    known_ = scanned;
  }
  rec.known = known_count();

  // Accuracy: v_t against the greedy policy's value in the known game.
  const GameModel known_game = build_known_game(model, known_, q);
  const PolicyValues in_known =
      policy_evaluation(known_game, pad_policy(policy, known_game), options_.eval_tol);
  for (StateIndex s = 0; s < n; ++s) {
    if (model.is_terminal(s)) continue;
    for (int i = 0; i < kNumPlayers; ++i) {
      if (q.v[i][s] - in_known.v[i][s] > eps) ++rec.accuracy_violations;
    }
  }

  if (oracle_ != nullptr) {
    rec.oracle_checked = true;
    const QTables& star = oracle_->q_star;
    for (StateIndex s = 0; s < n; ++s) {
      if (model.is_terminal(s)) continue;
      for (int i = 0; i < kNumPlayers; ++i) {
        for (int p = 0; p < np; ++p) {
          ++rec.optimism_checks;
          if (q.q[i](s, p) < star.q[i](s, p) - options_.optimism_tol) ++rec.optimism_violations;
        }
        if (q.v[i][s] < star.v[i][s] - eps) ++rec.value_optimism_violations;
      }
    }
    const PolicyValues in_model = policy_evaluation(model, policy, options_.eval_tol);
    for (int i = 0; i < kNumPlayers; ++i) {
      if (in_model.v[i][current] < star.v[i][current] - 4.0 * eps) rec.eps4_ok = false;
    }
  }

  log_.optimism_violations += rec.optimism_violations;
  log_.optimism_checks += rec.optimism_checks;
  log_.value_optimism_violations += rec.value_optimism_violations;
  log_.accuracy_violations += rec.accuracy_violations;
  if (!rec.eps4_ok) ++log_.eps_or_better_violations;
  if (rec.optimism_violations > 0 || rec.value_optimism_violations > 0 ||
      rec.accuracy_violations > 0 || !rec.eps4_ok) {
    log_.violation_times.push_back(t);
  }
  log_.checkpoints.push_back(rec);
  return rec;
}

}  // namespace dnq
