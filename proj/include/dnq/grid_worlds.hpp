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

#ifndef DNQ_GRID_WORLDS_HPP_
#define DNQ_GRID_WORLDS_HPP_

#include <array>
#include <string>
#include <vector>

#include "dnq/markov_game.hpp"

namespace dnq {

// Grid actions in index order.
enum GridAction : ActionIndex { kDown = 0, kLeft = 1, kUp = 2, kRight = 3 };
inline constexpr int kNumGridActions = 4;

struct StochasticCell {
  int cell = 0;
  double success_prob = 1.0;
};

// Cells are numbered 1..width*height row-major from the bottom-left corner,
// so `up` maps c to c + width.
struct GridSpec {
  int width = 3;
  int height = 3;
  int start_1 = 1;
  int start_2 = 3;
  int goal_1 = 9;
  int goal_2 = 7;
  // `up` from one of these cells succeeds with the given probability and
  // otherwise leaves the mover in place.
  std::vector<StochasticCell> stochastic_up_cells;
  bool shared_goal = false;
  double gamma = 0.8;
};

GridSpec grid1_spec();
GridSpec grid2_spec();

struct GridWorld {
  GridSpec spec;
  GameModel model;
  // cells[s] = {cell of player 1, cell of player 2}.
  std::vector<std::array<int, 2>> cells;

  // -1 when (c1, c2) is not a state.
  StateIndex state_of(int cell_1, int cell_2) const;
  int mirror_cell(int cell) const;
  // Left-right reflection combined with swapping the players.
  StateIndex mirror_state(StateIndex s) const;
  static ActionIndex mirror_action(ActionIndex a);
};

// Throws InvalidSpec on malformed layouts.
GridWorld make_grid_world(const GridSpec& spec);

// Every non-terminal state can reach a terminal one under some profile sequence.
bool all_states_reach_terminal(const GameModel& model);

}  // namespace dnq

#endif  // DNQ_GRID_WORLDS_HPP_
