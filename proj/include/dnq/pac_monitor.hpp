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


#ifndef DNQ_PAC_MONITOR_HPP_
#define DNQ_PAC_MONITOR_HPP_

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dnq/learners.hpp"
#include "dnq/markov_game.hpp"
#include "dnq/nash_oracle.hpp"

namespace dnq {

// How a configured epsilon turns into the learner's epsilon_1.
//   kTheorem: epsilon is the PAC accuracy, epsilon_1 = (1 - gamma) epsilon / 3.
//   kDirect:  epsilon is epsilon_1 itself.
enum class EpsilonMode { kTheorem, kDirect };

struct PacParams {
  double epsilon = 0.06;
  double delta = 0.1;
  double epsilon_1 = 0.004;
  int m = 50;
  double gamma = 0.8;

  static PacParams from_epsilon(double epsilon, double delta, int m, double gamma,
                                EpsilonMode mode = EpsilonMode::kTheorem);
};

struct GameDims {
  int states = 0;
  int actions_1 = 0;
  int actions_2 = 0;
  double profiles() const { return static_cast<double>(states) * actions_1 * actions_2; }
};

struct BoundsReport {
  PacParams params;
  GameDims dims;
  double v_max = 0.0;
  double kappa = 0.0;  // |S||A1||A2| / ((1 - gamma) epsilon_1)
  int horizon = 0;     // truncation horizon H for (gamma, epsilon)
  double zeta = 0.0;   // 2 kappa + 4 m kappa at the configured m
  double sample_bound = 0.0;
  // The m that makes the high-probability argument go through, and the
  // quantities it implies.
  double theoretical_m = 0.0;
  double zeta_theoretical = 0.0;
  double sample_bound_theoretical = 0.0;
  // Hard event caps.
  double max_successful_updates = 0.0;  // 2 kappa
  double max_attempted_updates = 0.0;   // 2 |S||A1||A2| (1 + 2 kappa)
  double max_escape_events = 0.0;       // 4 m kappa
  // Successful updates any single (player, s, a1, a2) entry can receive.
  std::int64_t per_entry_update_cap = 0;
};

// Throws ConfigError on non-positive parameters.
BoundsReport compute_bounds(const PacParams& params, const GameDims& dims);
void write_bounds_report(std::ostream& out, const BoundsReport& report);

// Both players' residuals Q^i - R^i - gamma sum T v^i at (s, profile) are at
// most 3 epsilon_1. q.v supplies v_t. Terminal states count as known.
bool known_set_membership(const GameModel& model, const QTables& q, StateIndex s, int profile,
                          double epsilon_1);
KnownSet scan_known_set(const GameModel& model, const QTables& q, double epsilon_1);

struct CheckpointRecord {
  TimeStep t = 0;
  std::int64_t optimism_violations = 0;  // (player, s, profile) with Q_t < Q* - 1e-6
  std::int64_t optimism_checks = 0;
  std::int64_t value_optimism_violations = 0;  // (player, s) with v_t < v* - epsilon
  std::int64_t accuracy_violations = 0;  // (player, s) with v_t - v_{M_K} > epsilon
  bool eps4_ok = true;  // greedy policy within 4 epsilon of v* at the current state
  bool oracle_checked = false;
  int known = 0;
  std::int64_t successful = 0;
  std::int64_t attempted = 0;
  std::int64_t escapes = 0;
};

// `t, optimism_viol, accuracy_viol, eps4_ok, |K_t|, successful, attempted, escapes`
void write_checkpoint_line(std::ostream& out, const CheckpointRecord& record);

struct MonitorLog {
  std::int64_t successful_updates = 0;
  std::int64_t attempted_updates = 0;
  std::int64_t escape_events = 0;

  std::int64_t optimism_violations = 0;
  std::int64_t optimism_checks = 0;
  std::int64_t value_optimism_violations = 0;
  std::int64_t accuracy_violations = 0;
  std::int64_t eps_or_better_violations = 0;
  std::vector<TimeStep> violation_times;  // checkpoints with any violation

  // Q entries that went up, or successful updates that moved by less than
  // epsilon_1.
  std::int64_t monotonicity_violations = 0;
  // Known-set flips at profiles other than the one just updated.
  std::int64_t indirect_known_changes = 0;
  // Checkpoints where the incremental known set disagreed with a full scan.
  std::int64_t known_set_mismatches = 0;

  std::vector<CheckpointRecord> checkpoints;
};

// Adds one step's events and enforces the hard caps. Throws BoundViolation
// naming the cap that failed.
void record_step(MonitorLog& log, const StepEvents& events, bool escaped,
                 const BoundsReport& bounds);

struct AuditOptions {
  double optimism_tol = 1e-6;
  double eval_tol = 1e-9;
};

// Owns the known set of one run. The known set is kept incrementally: after
// Q changes at s, the profiles at s and every profile that can move into s
// are re-tested.
class PacMonitor {
 public:
  // oracle may be null or unconverged; oracle-based checks are then skipped.
  PacMonitor(const GameModel& model, const BoundsReport& bounds, const OracleResult* oracle,
             const QTables& initial, AuditOptions options = {});

  bool is_known(StateIndex s, int profile) const {
    return known_[static_cast<std::size_t>(s) * model_->num_profiles() + profile];
  }
  int known_count() const;
  const KnownSet& known_set() const { return known_; }

  // Counts the step executed at (s, profile) and, when Q changed, refreshes
  // the known set around s.
  void on_step(StateIndex s, int profile, const StepEvents& events, bool escaped,
               const QTables& q);

  CheckpointRecord checkpoint(TimeStep t, const QTables& q, const JointPolicy& policy,
                              StateIndex current);

  const MonitorLog& log() const { return log_; }

 private:
  void retest(const QTables& q, StateIndex s, int profile, StateIndex updated_s,
              int updated_profile);

  const GameModel* model_;
  BoundsReport bounds_;
  const OracleResult* oracle_;
  AuditOptions options_;
  KnownSet known_;
  // predecessors_[s'] lists slots (s * |A| + profile) with T(s, profile, s') > 0.
  std::vector<std::vector<int>> predecessors_;
  std::array<std::vector<int>, kNumPlayers> entry_updates_;
  QTables last_q_;
  MonitorLog log_;
};

}  // namespace dnq

#endif  // DNQ_PAC_MONITOR_HPP_
