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


#include "dnq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace dnq {
namespace {

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("bad value for " + key + ": '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("bad boolean for " + key + ": '" + value + "'");
}

// "1:0.5,3:0.5"; "-" or empty clears the list.
std::vector<StochasticCell> parse_stochastic_cells(const std::string& key,
                                                   const std::string& value) {
  std::vector<StochasticCell> out;
  if (value.empty() || value == "-") return out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("bad entry in " + key + ": '" + item + "'");
    out.push_back({parse_number<int>(key, trim(item.substr(0, colon))),
                   parse_number<double>(key, trim(item.substr(colon + 1)))});
  }
  return out;
}

std::string csv_safe(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

constexpr const char* kRunsHeader =
    "run_id,seed,game,algorithm,gamma,m,epsilon1,converged,convergence_step,total_steps,"
    "episodes,successful_updates,attempted_updates,escape_events,optimism_violations,"
    "accuracy_violations,v1_init,v2_init,wall_ms,error";

}  // namespace

std::string algorithm_name(Algorithm algorithm) {
  return algorithm == Algorithm::kDelayedNashQ ? "delayed_nash_q" : "nash_q";
}

double ExperimentConfig::resolved_epsilon_1(double gamma_value) const {
  if (epsilon_1) return *epsilon_1;
  return epsilon_mode == EpsilonMode::kTheorem ? (1.0 - gamma_value) * epsilon / 3.0 : epsilon;
}

void apply_config_entry(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "game") {
    c.game = value;
  } else if (key == "algorithm") {
    if (value == "delayed_nash_q") {
      c.algorithm = Algorithm::kDelayedNashQ;
    } else if (value == "nash_q") {
      c.algorithm = Algorithm::kNashQ;
    } else {
      throw ConfigError("unknown algorithm: " + value);
    }
  } else if (key == "gamma") {
    c.gamma = parse_number<double>(key, value);
  } else if (key == "epsilon") {
    c.epsilon = parse_number<double>(key, value);
  } else if (key == "epsilon_mode") {
    if (value == "theorem") {
      c.epsilon_mode = EpsilonMode::kTheorem;
    } else if (value == "direct") {
      c.epsilon_mode = EpsilonMode::kDirect;
    } else {
      throw ConfigError("epsilon_mode must be theorem or direct");
    }
  } else if (key == "epsilon_1") {
    c.epsilon_1 = parse_number<double>(key, value);
  } else if (key == "delta") {
    c.delta = parse_number<double>(key, value);
  } else if (key == "m") {
    c.m = parse_number<int>(key, value);
  } else if (key == "max_steps") {
    c.max_steps = parse_number<std::int64_t>(key, value);
  } else if (key == "runs") {
    c.runs = parse_number<int>(key, value);
  } else if (key == "base_seed" || key == "seed") {
    c.base_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "checkpoint_interval") {
    c.checkpoint_interval = parse_number<std::int64_t>(key, value);
  } else if (key == "convergence_window_episodes") {
    c.convergence_window_episodes = parse_number<int>(key, value);
  } else if (key == "certify_tol") {
    c.certify_tol = parse_number<double>(key, value);
  } else if (key == "oracle_tol") {
    c.oracle_tol = parse_number<double>(key, value);
  } else if (key == "oracle_start") {
    if (value == "v_max") {
      c.oracle_from_v_max = true;
    } else if (value == "zero") {
      c.oracle_from_v_max = false;
    } else {
      throw ConfigError("oracle_start must be v_max or zero");
    }
  } else if (key == "selection") {
    c.selection = parse_selection_rule(value);
  } else if (key == "exploration_rate") {
    c.exploration_rate = parse_number<double>(key, value);
  } else if (key == "output_dir" || key == "out") {
    c.output_dir = value;
  } else if (key == "threads") {
    c.threads = parse_number<int>(key, value);
  } else if (key == "grid_width") {
    c.grid.width = parse_number<int>(key, value);
  } else if (key == "grid_height") {
    c.grid.height = parse_number<int>(key, value);
  } else if (key == "grid_start_1") {
    c.grid.start_1 = parse_number<int>(key, value);
  } else if (key == "grid_start_2") {
    c.grid.start_2 = parse_number<int>(key, value);
  } else if (key == "grid_goal_1") {
    c.grid.goal_1 = parse_number<int>(key, value);
  } else if (key == "grid_goal_2") {
    c.grid.goal_2 = parse_number<int>(key, value);
  } else if (key == "grid_shared_goal") {
    c.grid.shared_goal = parse_bool(key, value);
  } else if (key == "grid_stochastic_up") {
    c.grid.stochastic_up_cells = parse_stochastic_cells(key, value);
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_config_entry(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

ExperimentConfig read_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, std::move(base));
}

void validate_config(const ExperimentConfig& c) {
  if (c.max_steps <= 0) throw ConfigError("max_steps must be positive");
  if (c.runs < 1) throw ConfigError("runs must be at least 1");
  if (c.gamma && !(*c.gamma >= 0.0 && *c.gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (c.epsilon_1 && !(*c.epsilon_1 > 0.0)) throw ConfigError("epsilon_1 must be positive");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (c.m < 1) throw ConfigError("m must be at least 1");
  if (c.checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be non-negative");
  if (c.convergence_window_episodes < 1) throw ConfigError("convergence window must be at least 1");
  if (!(c.certify_tol > 0.0) || !(c.oracle_tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (c.exploration_rate < 0.0 || c.exploration_rate > 1.0) {
    throw ConfigError("exploration_rate must lie in [0, 1]");
  }
  if (c.threads < 0) throw ConfigError("threads must be non-negative");
}

GameModel build_game(const ExperimentConfig& c) {
  if (c.game.rfind("file:", 0) == 0) {
    GameModel model = read_game_file(c.game.substr(5));
    if (c.gamma && *c.gamma != model.gamma()) {
      throw ConfigError("gamma in the config differs from the game file");
    }
    return model;
  }
  GridSpec spec;
  if (c.game == "grid1") {
    spec = grid1_spec();
  } else if (c.game == "grid2") {
    spec = grid2_spec();
  } else if (c.game == "custom") {
    spec = c.grid;
  } else {
    throw ConfigError("unknown game: " + c.game);
  }
  if (c.gamma) spec.gamma = *c.gamma;
  try {
    return make_grid_world(spec).model;
  } catch (const InvalidSpec& e) {
    throw ConfigError(std::string("invalid grid: ") + e.what());
  }
}

ExperimentSetup prepare_experiment(const ExperimentConfig& c) {
  validate_config(c);
  std::optional<GridWorld> grid;
  GameModel model = build_game(c);
  if (c.game == "grid1" || c.game == "grid2" || c.game == "custom") {
    GridSpec spec = c.game == "grid1" ? grid1_spec() : c.game == "grid2" ? grid2_spec() : c.grid;
    if (c.gamma) spec.gamma = *c.gamma;
    grid = make_grid_world(spec);
  }

  OracleOptions oracle_options;
  oracle_options.tol = c.oracle_tol;
  oracle_options.selection = c.selection;
  oracle_options.initial_q = c.oracle_from_v_max ? model.v_max() : 0.0;
  OracleResult oracle = nash_value_iteration(model, oracle_options);

  const double gamma = model.gamma();
  PacParams params;
  params.gamma = gamma;
  params.m = c.m;
  params.delta = c.delta;
  params.epsilon_1 = c.resolved_epsilon_1(gamma);
  params.epsilon = c.epsilon_mode == EpsilonMode::kDirect && !c.epsilon_1
                       ? 3.0 * params.epsilon_1 / (1.0 - gamma)
                       : c.epsilon;
  BoundsReport bounds =
      compute_bounds(params, {model.num_states(), model.num_actions_1(), model.num_actions_2()});
  return {std::move(model), std::move(oracle), bounds, std::move(grid)};
}

std::unique_ptr<Learner> make_learner(const ExperimentConfig& c, const GameModel& model,
                                      double epsilon_1) {
  if (c.algorithm == Algorithm::kDelayedNashQ) {
    DelayedParams params;
    params.m = c.m;
    params.epsilon_1 = epsilon_1;
    params.selection = c.selection;
    return std::make_unique<DelayedNashQLearner>(model, params);
  }
  NashQParams params;
  params.exploration_rate = c.exploration_rate;
  params.selection = c.selection;
  return std::make_unique<NashQLearner>(model, params);
}

ConvergenceDetector::ConvergenceDetector(int window, Certifier certify)
    : window_(window), certify_(std::move(certify)) {
  if (window_ < 1) throw ConfigError("convergence window must be at least 1");
}

std::optional<TimeStep> ConvergenceDetector::observe(TimeStep step, std::uint64_t version,
                                                     const std::function<JointPolicy()>& policy) {
  if (converged_at_) return converged_at_;
  if (version_ && *version_ == version && streak_ > 0) return push(step, false, nullptr);
  version_ = version;
  const JointPolicy current = policy();
  return push(step, true, &current);
}

std::optional<TimeStep> ConvergenceDetector::observe(TimeStep step, const JointPolicy& policy) {
  if (converged_at_) return converged_at_;
  return push(step, true, &policy);
}

std::optional<TimeStep> ConvergenceDetector::push(TimeStep step, bool changed,
                                                  const JointPolicy* policy) {
  if (changed && (streak_ == 0 || !(*policy == candidate_))) {
    candidate_ = *policy;
    candidate_since_ = step;
    streak_ = 1;
    candidate_rejected_ = false;
  } else {
    ++streak_;
  }
  if (streak_ >= window_ && !candidate_rejected_) {
    ++certifications_;
    if (certify_(candidate_)) {
      converged_at_ = candidate_since_;
    } else {
      candidate_rejected_ = true;
    }
  }
  return converged_at_;
}

std::optional<TimeStep> detect_convergence(const std::vector<EpisodePolicy>& history, int window,
                                           const ConvergenceDetector::Certifier& certify) {
  ConvergenceDetector detector(window, certify);
  for (const auto& entry : history) {
    if (auto step = detector.observe(entry.step, entry.policy)) return step;
  }
  return std::nullopt;
}

RunRecord run_single(const ExperimentConfig& c, const ExperimentSetup& setup, int run_id,
                     std::uint64_t seed, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const GameModel& model = setup.model;
  RunRecord rec;
  rec.run_id = run_id;
  rec.seed = seed;
  rec.game = c.game;
  rec.algorithm = algorithm_name(c.algorithm);
  rec.gamma = model.gamma();
  rec.m = c.m;
  rec.epsilon_1 = setup.bounds.params.epsilon_1;

  try {
    std::unique_ptr<Learner> learner = make_learner(c, model, rec.epsilon_1);
    PacMonitor monitor(model, setup.bounds, &setup.oracle, learner->tables());
    ConvergenceDetector detector(c.convergence_window_episodes, [&](const JointPolicy& policy) {
      return is_nash_profile(model, policy, c.certify_tol);
    });
    Rng rng(seed);

    auto audit = [&](TimeStep t, StateIndex current) {
      const CheckpointRecord r =
          monitor.checkpoint(t, learner->tables(), learner->greedy_policy(), current);
      if (options.checkpoint_log != nullptr) write_checkpoint_line(*options.checkpoint_log, r);
    };

    StateIndex s = model.initial();
    TimeStep t = 0;
    TimeStep last_audit = 0;
    while (t < c.max_steps) {
      ++t;
      const ActionProfile a = learner->choose(s, rng);
      const Transition tr = sample_transition(model, s, a.a1, a.a2, rng);
      const int profile = model.profile_index(a.a1, a.a2);
      const bool escaped = !monitor.is_known(s, profile);
      const StepEvents ev =
          learner->observe(t, s, a.a1, a.a2, tr.reward[0], tr.reward[1], tr.next);
      monitor.on_step(s, profile, ev, escaped, learner->tables());

      s = tr.next;
      bool stop = false;
      if (model.is_terminal(s)) {
        ++rec.episodes;
        s = model.initial();
        const auto step = detector.observe(t, learner->policy_version(),
                                           [&] { return learner->greedy_policy(); });
        if (step) {
          rec.converged = true;
          rec.convergence_step = *step;
          stop = true;
        }
      }
      if (c.checkpoint_interval > 0 && t % c.checkpoint_interval == 0) {
        audit(t, s);
        last_audit = t;
      }
      if (stop) break;
    }
    if (last_audit != t) audit(t, s);

    rec.total_steps = t;
    const MonitorLog& log = monitor.log();
    rec.successful_updates = log.successful_updates;
    rec.attempted_updates = log.attempted_updates;
    rec.escape_events = log.escape_events;
    rec.optimism_violations = log.optimism_violations;
    rec.optimism_checks = log.optimism_checks;
    rec.accuracy_violations = log.accuracy_violations;
    rec.monotonicity_violations = log.monotonicity_violations;
    rec.known_set_mismatches = log.known_set_mismatches;
    rec.eps_or_better_violations = log.eps_or_better_violations;
    rec.plain_selections = learner->stage_stats().plain_selections;
    rec.value_increases = learner->stage_stats().value_increases;
    rec.unexplained_value_increases = learner->stage_stats().unexplained_value_increases;
    rec.v1_init = learner->tables().v[0][model.initial()];
    rec.v2_init = learner->tables().v[1][model.initial()];
    rec.final_policy = learner->greedy_policy();
    if (options.keep_checkpoints) rec.checkpoints = log.checkpoints;
  } catch (const BoundViolation& e) {
    rec.error = std::string("bound violation: ") + e.what();
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  return rec;
}

std::vector<RunRecord> run_batch(const ExperimentConfig& c, const ExperimentSetup& setup,
                                 const RunOptions& options) {
  std::vector<RunRecord> records(c.runs);
  int threads = c.threads > 0 ? c.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, c.runs);
  RunOptions per_run = options;
  per_run.checkpoint_log = nullptr;  // interleaved output would be unreadable

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < c.runs; i = next++) {
      records[i] = run_single(c, setup, i, c.base_seed + static_cast<std::uint64_t>(i), per_run);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

BatchSummary summarize(const std::vector<RunRecord>& records) {
  BatchSummary out;
  out.runs = static_cast<int>(records.size());
  std::vector<double> steps;
  for (const auto& r : records) {
    if (!r.error.empty()) ++out.failed;
    if (r.converged && r.convergence_step) steps.push_back(static_cast<double>(*r.convergence_step));
  }
  out.converged = static_cast<int>(steps.size());
  out.convergence_rate = out.runs > 0 ? static_cast<double>(out.converged) / out.runs : 0.0;
  if (steps.empty()) return out;

  double sum = 0.0;
  for (double x : steps) sum += x;
  out.mean_step = sum / steps.size();
  std::sort(steps.begin(), steps.end());
  const std::size_t mid = steps.size() / 2;
  out.median_step = steps.size() % 2 == 1 ? steps[mid] : 0.5 * (steps[mid - 1] + steps[mid]);
  if (steps.size() > 1) {
    double ss = 0.0;
    for (double x : steps) ss += (x - out.mean_step) * (x - out.mean_step);
    out.stddev_step = std::sqrt(ss / (steps.size() - 1));
  }
  return out;
}

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kRunsHeader << '\n';
  for (const auto& r : records) {
    char wall[32];
    std::snprintf(wall, sizeof(wall), "%.3f", r.wall_ms);
    out << r.run_id << ',' << r.seed << ',' << r.game << ',' << r.algorithm << ','
        << format_double(r.gamma) << ',' << r.m << ',' << format_double(r.epsilon_1) << ','
        << (r.converged ? 1 : 0) << ',';
    if (r.convergence_step) out << *r.convergence_step;
    out << ',' << r.total_steps << ',' << r.episodes << ',' << r.successful_updates << ','
        << r.attempted_updates << ',' << r.escape_events << ',' << r.optimism_violations << ','
        << r.accuracy_violations << ',' << format_double(r.v1_init) << ','
        << format_double(r.v2_init) << ',' << wall << ',' << csv_safe(r.error) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const BatchSummary& s) {
  out << "runs,converged,failed,convergence_rate,mean_convergence_step,"
         "median_convergence_step,stddev_convergence_step\n";
  out << s.runs << ',' << s.converged << ',' << s.failed << ',' << format_double(s.convergence_rate)
      << ',' << format_double(s.mean_step) << ',' << format_double(s.median_step) << ','
      << format_double(s.stddev_step) << '\n';
}

std::vector<RunRecord> read_runs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kRunsHeader) {
    throw ParseError("runs CSV header mismatch");
  }
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 20) throw ParseError("runs CSV row has " + std::to_string(f.size()) + " fields");
    RunRecord r;
    r.run_id = std::stoi(f[0]);
    r.seed = std::stoull(f[1]);
    r.game = f[2];
    r.algorithm = f[3];
    r.gamma = std::stod(f[4]);
    r.m = std::stoi(f[5]);
    r.epsilon_1 = std::stod(f[6]);
    r.converged = f[7] == "1";
    if (!f[8].empty()) r.convergence_step = std::stoll(f[8]);
    r.total_steps = std::stoll(f[9]);
    r.episodes = std::stoll(f[10]);
    r.successful_updates = std::stoll(f[11]);
    r.attempted_updates = std::stoll(f[12]);
    r.escape_events = std::stoll(f[13]);
    r.optimism_violations = std::stoll(f[14]);
    r.accuracy_violations = std::stoll(f[15]);
    r.v1_init = std::stod(f[16]);
    r.v2_init = std::stod(f[17]);
    r.wall_ms = std::stod(f[18]);
    r.error = f[19];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace dnq
