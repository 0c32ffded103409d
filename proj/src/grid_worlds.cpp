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

#include "dnq/grid_worlds.hpp"

#include <deque>

namespace dnq {
namespace {

struct CellMove {
  int cell;
  double prob;
};

int step_cell(const GridSpec& spec, int cell, ActionIndex action) {
  const int row = (cell - 1) / spec.width;
  const int col = (cell - 1) % spec.width;
  switch (action) {
    case kDown:
      return row > 0 ? cell - spec.width : cell;
    case kLeft:
      return col > 0 ? cell - 1 : cell;
    case kUp:
      return row + 1 < spec.height ? cell + spec.width : cell;
    case kRight:
      return col + 1 < spec.width ? cell + 1 : cell;
  }
  return cell;
}

std::vector<CellMove> intended_moves(const GridSpec& spec, int cell, ActionIndex action) {
  const int target = step_cell(spec, cell, action);
  if (action == kUp && target != cell) {
    for (const auto& sc : spec.stochastic_up_cells) {
      if (sc.cell == cell && sc.success_prob < 1.0) {
        return {{target, sc.success_prob}, {cell, 1.0 - sc.success_prob}};
      }
    }
  }
  return {{target, 1.0}};
}

// Applies the bounce rule: players may not end in the same cell unless it is
// the shared goal. A mover that would coincide is sent back; if both moved,
// both are.
std::array<int, 2> resolve(const GridSpec& spec, std::array<int, 2> from,
                           std::array<int, 2> to) {
  auto exempt = [&](int cell) { return spec.shared_goal && cell == spec.goal_1; };
  while (to[0] == to[1] && !exempt(to[0])) {
    const bool moved_1 = to[0] != from[0];
    const bool moved_2 = to[1] != from[1];
    if (moved_1) to[0] = from[0];
    if (moved_2) to[1] = from[1];
    if (!moved_1 && !moved_2) break;
  }
  return to;
}

void check_cell(const GridSpec& spec, int cell, const char* what) {
  if (cell < 1 || cell > spec.width * spec.height) {
    throw InvalidSpec(std::string(what) + " cell " + std::to_string(cell) + " is off the board");
  }
}

}  // namespace

GridSpec grid1_spec() { return GridSpec{}; }

GridSpec grid2_spec() {
  GridSpec spec;
  spec.goal_1 = 8;
  spec.goal_2 = 8;
  spec.shared_goal = true;
  spec.stochastic_up_cells = {{1, 0.5}, {3, 0.5}};
  return spec;
}

StateIndex GridWorld::state_of(int cell_1, int cell_2) const {
  for (std::size_t s = 0; s < cells.size(); ++s) {
    if (cells[s][0] == cell_1 && cells[s][1] == cell_2) return static_cast<StateIndex>(s);
  }
  return -1;
}

int GridWorld::mirror_cell(int cell) const {
  const int row = (cell - 1) / spec.width;
  const int col = (cell - 1) % spec.width;
  return row * spec.width + (spec.width - 1 - col) + 1;
}

StateIndex GridWorld::mirror_state(StateIndex s) const {
  return state_of(mirror_cell(cells[s][1]), mirror_cell(cells[s][0]));
}

ActionIndex GridWorld::mirror_action(ActionIndex a) {
  if (a == kLeft) return kRight;
  if (a == kRight) return kLeft;
  return a;
}

GridWorld make_grid_world(const GridSpec& spec) {
  if (spec.width < 1 || spec.height < 1) throw InvalidSpec("board needs positive dimensions");
  if (spec.width * spec.height < 2) throw InvalidSpec("board needs at least two cells");
  check_cell(spec, spec.start_1, "start_1");
  check_cell(spec, spec.start_2, "start_2");
  check_cell(spec, spec.goal_1, "goal_1");
  check_cell(spec, spec.goal_2, "goal_2");
  for (const auto& sc : spec.stochastic_up_cells) {
    check_cell(spec, sc.cell, "stochastic");
    if (!(sc.success_prob > 0.0 && sc.success_prob <= 1.0)) {
      throw InvalidSpec("stochastic success probability must lie in (0, 1]");
    }
  }
  if (spec.start_1 == spec.start_2) throw InvalidSpec("start cells must differ");
  if (spec.shared_goal && spec.goal_1 != spec.goal_2) {
    throw InvalidSpec("a shared goal needs goal_1 == goal_2");
  }
  if (!spec.shared_goal && spec.goal_1 == spec.goal_2) {
    throw InvalidSpec("separate goals must differ; set shared_goal for a common goal");
  }
  if (spec.start_1 == spec.goal_1 || spec.start_2 == spec.goal_2) {
    throw InvalidSpec("a player may not start on its goal");
  }

  const int num_cells = spec.width * spec.height;
  std::vector<std::array<int, 2>> cells;
  for (int c1 = 1; c1 <= num_cells; ++c1) {
    for (int c2 = 1; c2 <= num_cells; ++c2) {
      if (c1 != c2 || (spec.shared_goal && c1 == spec.goal_1)) cells.push_back({c1, c2});
    }
  }
  auto index_of = [&](int c1, int c2) {
    for (std::size_t s = 0; s < cells.size(); ++s) {
      if (cells[s][0] == c1 && cells[s][1] == c2) return static_cast<StateIndex>(s);
    }
    return StateIndex{-1};
  };

  GridWorld world{spec,
                  GameModel(static_cast<int>(cells.size()), kNumGridActions, kNumGridActions,
                            spec.gamma, index_of(spec.start_1, spec.start_2)),
                  cells};
  GameModel& model = world.model;
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    model.state_labels.push_back("(" + std::to_string(cells[s][0]) + "," +
                                 std::to_string(cells[s][1]) + ")");
  }

  for (StateIndex s = 0; s < model.num_states(); ++s) {
    const auto [c1, c2] = cells[s];
    if (c1 == spec.goal_1 || c2 == spec.goal_2) {
      model.set_terminal(s);
      continue;
    }
    for (ActionIndex a1 = 0; a1 < kNumGridActions; ++a1) {
      for (ActionIndex a2 = 0; a2 < kNumGridActions; ++a2) {
        std::vector<Outcome> outcomes;
        double r1 = 0.0;
        double r2 = 0.0;
        for (const auto& m1 : intended_moves(spec, c1, a1)) {
          for (const auto& m2 : intended_moves(spec, c2, a2)) {
            const auto end = resolve(spec, {c1, c2}, {m1.cell, m2.cell});
            const double prob = m1.prob * m2.prob;
            outcomes.push_back({index_of(end[0], end[1]), prob});
            if (end[0] == spec.goal_1) r1 += prob;
            if (end[1] == spec.goal_2) r2 += prob;
          }
        }
        model.set_profile(s, model.profile_index(a1, a2), std::move(outcomes), r1, r2);
      }
    }
  }
  if (model.is_terminal(model.initial())) throw InvalidSpec("initial state is terminal");
  model.validate();
  return world;
}

bool all_states_reach_terminal(const GameModel& model) {
  const int n = model.num_states();
  std::vector<std::vector<StateIndex>> predecessors(n);
  for (StateIndex s = 0; s < n; ++s) {
    if (model.is_terminal(s)) continue;
    for (int p = 0; p < model.num_profiles(); ++p) {
      for (const auto& o : model.outcomes(s, p)) predecessors[o.next].push_back(s);
    }
  }
  std::vector<bool> reaches(n, false);
  std::deque<StateIndex> frontier;
  for (StateIndex s = 0; s < n; ++s) {
    if (model.is_terminal(s)) {
      reaches[s] = true;
      frontier.push_back(s);
    }
  }
  while (!frontier.empty()) {
    const StateIndex s = frontier.front();
    frontier.pop_front();
    for (StateIndex pred : predecessors[s]) {
      if (!reaches[pred]) {
        reaches[pred] = true;
        frontier.push_back(pred);
      }
    }
  }
  for (bool r : reaches) {
    if (!r) return false;
  }
  return true;
}

}  // namespace dnq
