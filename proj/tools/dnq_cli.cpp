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


// Command-line front end: run, batch, oracle, solve-stage, bounds.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dnq/experiment.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBound = 3;

struct ConfigFlags {
  std::string config_file;
  std::optional<std::string> game, algorithm, selection, out;
  std::optional<std::string> gamma, epsilon, m, runs, seed, max_steps;
  std::vector<std::string> overrides;  // key=value

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value config file");
    app->add_option("--game", game, "grid1, grid2, custom or file:<path>");
    app->add_option("--algorithm", algorithm, "delayed_nash_q or nash_q");
    app->add_option("--selection", selection, "welfare, class_welfare or class_order");
    app->add_option("--gamma", gamma);
    app->add_option("--epsilon", epsilon);
    app->add_option("--m", m);
    app->add_option("--runs", runs);
    app->add_option("--seed", seed, "base seed");
    app->add_option("--max-steps", max_steps);
    app->add_option("--out", out, "output directory");
    app->add_option("--set", overrides, "extra config entries as key=value");
  }

  dnq::ExperimentConfig resolve() const {
    dnq::ExperimentConfig config;
    if (!config_file.empty()) config = dnq::read_config_file(config_file);
    auto apply = [&](const char* key, const std::optional<std::string>& value) {
      if (value) dnq::apply_config_entry(config, key, *value);
    };
    apply("game", game);
    apply("algorithm", algorithm);
    apply("selection", selection);
    apply("gamma", gamma);
    apply("epsilon", epsilon);
    apply("m", m);
    apply("runs", runs);
    apply("base_seed", seed);
    apply("max_steps", max_steps);
    apply("output_dir", out);
    for (const auto& entry : overrides) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) throw dnq::ConfigError("--set expects key=value, got " + entry);
      dnq::apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
    }
    dnq::validate_config(config);
    return config;
  }
};

std::filesystem::path output_dir(const dnq::ExperimentConfig& config) {
  std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw dnq::Error("cannot write " + path.string());
  return out;
}

bool has_bound_violation(const std::vector<dnq::RunRecord>& records) {
  for (const auto& r : records) {
    if (r.error.rfind("bound violation", 0) == 0) return true;
  }
  return false;
}

void print_summary(const dnq::BatchSummary& s) {
  std::cout << "runs " << s.runs << "  converged " << s.converged << "  failed " << s.failed
            << "  rate " << s.convergence_rate << "\n"
            << "convergence step  mean " << std::fixed << std::setprecision(1) << s.mean_step
            << "  median " << s.median_step << "  stddev " << s.stddev_step << std::defaultfloat
            << "\n";
}

int cmd_run(const ConfigFlags& flags) {
  const dnq::ExperimentConfig config = flags.resolve();
  const dnq::ExperimentSetup setup = dnq::prepare_experiment(config);
  const auto dir = output_dir(config);
  std::ofstream checkpoints = open_out(dir / "checkpoints.txt");
  dnq::RunOptions options;
  options.checkpoint_log = &checkpoints;
  const dnq::RunRecord rec = dnq::run_single(config, setup, 0, config.base_seed, options);
  std::ofstream runs = open_out(dir / "runs.csv");
  dnq::write_runs_csv(runs, {rec});

  if (!rec.error.empty()) {
    std::cerr << "run failed: " << rec.error << "\n";
    return has_bound_violation({rec}) ? kExitBound : kExitError;
  }
  std::cout << "seed " << rec.seed << "  converged " << (rec.converged ? "yes" : "no");
  if (rec.convergence_step) std::cout << " at step " << *rec.convergence_step;
  std::cout << "  total steps " << rec.total_steps << "  episodes " << rec.episodes << "\n"
            << "updates " << rec.successful_updates << "/" << rec.attempted_updates
            << "  escapes " << rec.escape_events << "  v(initial) " << rec.v1_init << ", "
            << rec.v2_init << "\n";
  return 0;
}

int cmd_batch(const ConfigFlags& flags) {
  const dnq::ExperimentConfig config = flags.resolve();
  const dnq::ExperimentSetup setup = dnq::prepare_experiment(config);
  if (!setup.oracle.converged) {
    std::cerr << "warning: oracle did not converge (residual " << setup.oracle.residual
              << "); oracle audits are skipped\n";
  }
  const auto records = dnq::run_batch(config, setup);
  const auto dir = output_dir(config);
  std::ofstream runs = open_out(dir / "runs.csv");
  dnq::write_runs_csv(runs, records);
  const dnq::BatchSummary summary = dnq::summarize(records);
  std::ofstream sum = open_out(dir / "summary.csv");
  dnq::write_summary_csv(sum, summary);
  print_summary(summary);
  return has_bound_violation(records) ? kExitBound : 0;
}

int cmd_oracle(const ConfigFlags& flags) {
  const dnq::ExperimentConfig config = flags.resolve();
  const dnq::ExperimentSetup setup = dnq::prepare_experiment(config);
  const auto dir = output_dir(config);
  std::ofstream q = open_out(dir / "q_star.csv");
  dnq::write_q_csv(q, setup.model, setup.oracle.q_star);
  std::ofstream v = open_out(dir / "v_star.csv");
  dnq::write_v_csv(v, setup.model, setup.oracle.q_star);
  const auto s0 = setup.model.initial();
  std::cout << "converged " << (setup.oracle.converged ? "yes" : "no") << "  iterations "
            << setup.oracle.iterations << "  residual " << setup.oracle.residual
            << "  plain states " << setup.oracle.plain_states << "\n"
            << std::setprecision(12) << "v*(initial) " << setup.oracle.q_star.v[0][s0] << ", "
            << setup.oracle.q_star.v[1][s0] << "\n";
  if (!setup.oracle.converged) std::cerr << "warning: oracle did not converge\n";
  return 0;
}

int cmd_solve_stage(const std::string& path, const std::string& selection) {
  std::ifstream in(path);
  if (!in) throw dnq::ConfigError("cannot open " + path);
  const dnq::BimatrixGame game = dnq::parse_stage_game(in);
  const auto found = dnq::support_enumeration_equilibria(game);
  const Eigen::IOFormat row(Eigen::StreamPrecision, Eigen::DontAlignCols, " ", " ", "", "", "[",
                            "]");
  std::cout << found.equilibria.size() << " equilibria"
            << (found.degenerate ? " (degenerate supports skipped)" : "") << "\n";
  for (const auto& eq : found.equilibria) {
    std::cout << "  x " << eq.strategy_1.transpose().format(row) << "  y "
              << eq.strategy_2.transpose().format(row) << "  values " << eq.value_1 << ", "
              << eq.value_2 << "  " << dnq::to_string(dnq::classify_equilibrium(game, eq))
              << "\n";
  }
  const auto rule = dnq::parse_selection_rule(selection);
  const auto chosen = dnq::select_equilibrium(game, rule);
  std::cout << "selected (" << dnq::to_string(rule) << ")  x "
            << chosen.strategy_1.transpose().format(row) << "  y "
            << chosen.strategy_2.transpose().format(row) << "  values " << chosen.value_1 << ", "
            << chosen.value_2 << "  " << dnq::to_string(chosen.klass) << "\n";
  return 0;
}

int cmd_bounds(const ConfigFlags& flags) {
  const dnq::ExperimentConfig config = flags.resolve();
  const dnq::GameModel model = dnq::build_game(config);
  dnq::PacParams params;
  params.gamma = model.gamma();
  params.m = config.m;
  params.delta = config.delta;
  params.epsilon_1 = config.resolved_epsilon_1(model.gamma());
  params.epsilon = config.epsilon_mode == dnq::EpsilonMode::kDirect && !config.epsilon_1
                       ? 3.0 * params.epsilon_1 / (1.0 - model.gamma())
                       : config.epsilon;
  const auto report = dnq::compute_bounds(
      params, {model.num_states(), model.num_actions_1(), model.num_actions_2()});
  dnq::write_bounds_report(std::cout, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed Nash Q-learning experiments"};
  app.require_subcommand(1);

  ConfigFlags run_flags, batch_flags, oracle_flags, bounds_flags;
  auto* run = app.add_subcommand("run", "one seeded run");
  run_flags.attach(run);
  auto* batch = app.add_subcommand("batch", "runs seeds base_seed .. base_seed + runs - 1");
  batch_flags.attach(batch);
  auto* oracle = app.add_subcommand("oracle", "dump Q* and v* as CSV");
  oracle_flags.attach(oracle);
  auto* bounds = app.add_subcommand("bounds", "print the theoretical quantities");
  bounds_flags.attach(bounds);
  auto* solve = app.add_subcommand("solve-stage", "solve a bimatrix game from a text file");
  std::string stage_file;
  std::string stage_selection = std::string(dnq::to_string(dnq::kDefaultSelection));
  solve->add_option("file", stage_file)->required();
  solve->add_option("--selection", stage_selection);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*batch) return cmd_batch(batch_flags);
    if (*oracle) return cmd_oracle(oracle_flags);
    if (*bounds) return cmd_bounds(bounds_flags);
    if (*solve) return cmd_solve_stage(stage_file, stage_selection);
  } catch (const dnq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dnq::BoundViolation& e) {
    std::cerr << "bound violation: " << e.what() << "\n";
    return kExitBound;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
