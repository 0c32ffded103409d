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


#ifndef DNQ_EXPERIMENT_HPP_
#define DNQ_EXPERIMENT_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dnq/grid_worlds.hpp"
#include "dnq/learners.hpp"
#include "dnq/nash_oracle.hpp"
#include "dnq/pac_monitor.hpp"

namespace dnq {

enum class Algorithm { kDelayedNashQ, kNashQ };

struct ExperimentConfig {
  std::string game = "grid1";  // grid1, grid2, custom or file:<path>
  Algorithm algorithm = Algorithm::kDelayedNashQ;
  std::optional<double> gamma;  // grid games default to 0.8
  double epsilon = 0.06;
  EpsilonMode epsilon_mode = EpsilonMode::kTheorem;
  std::optional<double> epsilon_1;  // overrides the value derived from epsilon
  double delta = 0.1;
  int m = 50;
  std::int64_t max_steps = 5'000'000;
  int runs = 50;
  std::uint64_t base_seed = 1;
  std::int64_t checkpoint_interval = 10'000;
  int convergence_window_episodes = 50;
  double certify_tol = 1e-6;
  double oracle_tol = 1e-9;
  // Nash value iteration starts from v_max (as the delayed learner does) or
  // from zero.
  bool oracle_from_v_max = true;
  SelectionRule selection = kDefaultSelection;
  double exploration_rate = 0.1;  // nash_q only
  std::string output_dir = "out";
  int threads = 0;  // 0 = hardware concurrency
  GridSpec grid = grid1_spec();  // used when game == custom

  double resolved_epsilon_1(double gamma_value) const;
};

// `key = value` lines, `#` comments. Unknown keys and bad values throw
// ConfigError.
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig read_config_file(const std::string& path, ExperimentConfig base = {});
void validate_config(const ExperimentConfig& config);

// The model plus everything that is computed once per batch.
struct ExperimentSetup {
  GameModel model;
  OracleResult oracle;
  BoundsReport bounds;
  std::optional<GridWorld> grid;
};

GameModel build_game(const ExperimentConfig& config);
ExperimentSetup prepare_experiment(const ExperimentConfig& config);

std::unique_ptr<Learner> make_learner(const ExperimentConfig& config, const GameModel& model,
                                      double epsilon_1);

struct RunRecord {
  int run_id = 0;
  std::uint64_t seed = 0;
  std::string game;
  std::string algorithm;
  double gamma = 0.0;
  int m = 0;
  double epsilon_1 = 0.0;
  bool converged = false;
  std::optional<TimeStep> convergence_step;
  TimeStep total_steps = 0;
  std::int64_t episodes = 0;
  std::int64_t successful_updates = 0;
  std::int64_t attempted_updates = 0;
  std::int64_t escape_events = 0;
  std::int64_t optimism_violations = 0;
  std::int64_t accuracy_violations = 0;
  double v1_init = 0.0;
  double v2_init = 0.0;
  double wall_ms = 0.0;
  std::string error;  // non-empty for failed runs

  // Not serialized; kept for audits.
  std::int64_t optimism_checks = 0;
  std::int64_t monotonicity_violations = 0;
  std::int64_t plain_selections = 0;
  std::int64_t value_increases = 0;
  std::int64_t unexplained_value_increases = 0;
  std::int64_t known_set_mismatches = 0;
  std::int64_t eps_or_better_violations = 0;
  std::vector<CheckpointRecord> checkpoints;
  std::optional<JointPolicy> final_policy;
};

// Called at every episode boundary with the greedy policy in force. Returns
// the convergence step once a policy has been seen at `window` consecutive
// boundaries and `certify` accepts it. Each distinct candidate is certified
// once.
class ConvergenceDetector {
 public:
  using Certifier = std::function<bool(const JointPolicy&)>;

  ConvergenceDetector(int window, Certifier certify);

  // `version` changes whenever the policy may have changed; `policy` is only
  // called when it did.
  std::optional<TimeStep> observe(TimeStep step, std::uint64_t version,
                                  const std::function<JointPolicy()>& policy);
  std::optional<TimeStep> observe(TimeStep step, const JointPolicy& policy);

  std::optional<TimeStep> converged_at() const { return converged_at_; }
  int certifications() const { return certifications_; }

 private:
  std::optional<TimeStep> push(TimeStep step, bool changed, const JointPolicy* policy);

  int window_;
  Certifier certify_;
  std::optional<std::uint64_t> version_;
  JointPolicy candidate_;
  TimeStep candidate_since_ = 0;
  int streak_ = 0;
  bool candidate_rejected_ = false;
  int certifications_ = 0;
  std::optional<TimeStep> converged_at_;
};

struct EpisodePolicy {
  TimeStep step = 0;  // timestep of the episode boundary
  JointPolicy policy;
};

std::optional<TimeStep> detect_convergence(const std::vector<EpisodePolicy>& history, int window,
                                           const ConvergenceDetector::Certifier& certify);

struct RunOptions {
  bool keep_checkpoints = false;
  std::ostream* checkpoint_log = nullptr;
};

RunRecord run_single(const ExperimentConfig& config, const ExperimentSetup& setup, int run_id,
                     std::uint64_t seed, const RunOptions& options = {});

struct BatchSummary {
  int runs = 0;
  int converged = 0;
  int failed = 0;
  double convergence_rate = 0.0;
  // Over converged runs; zero when none converged.
  double mean_step = 0.0;
  double median_step = 0.0;
  double stddev_step = 0.0;
};

BatchSummary summarize(const std::vector<RunRecord>& records);

std::vector<RunRecord> run_batch(const ExperimentConfig& config, const ExperimentSetup& setup,
                                 const RunOptions& options = {});

std::string algorithm_name(Algorithm algorithm);

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records);
void write_summary_csv(std::ostream& out, const BatchSummary& summary);

// Reads a runs CSV back; used to check summaries against their rows.
std::vector<RunRecord> read_runs_csv(std::istream& in);

}  // namespace dnq

#endif  // DNQ_EXPERIMENT_HPP_
