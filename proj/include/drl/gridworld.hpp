#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "drl/environment.hpp"
#include "drl/error.hpp"

namespace drl {

struct Cell {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Moves: 0 up, 1 down, 2 left, 3 right.
inline constexpr int kGridActions = 4;
inline constexpr Cell kGridMoves[kGridActions] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};

struct GridLayout {
  int width = 0;
  int height = 0;
  Cell start;
  Cell goal;
  std::set<Cell> walls;
  std::map<Cell, double> terminals;  // includes the goal
  double step_penalty = 0.0;

  bool inside(Cell c) const { return c.row >= 0 && c.col >= 0 && c.row < height && c.col < width; }
  bool is_terminal(Cell c) const { return terminals.contains(c); }
  bool open(Cell c) const { return inside(c) && !walls.contains(c); }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row * width + c.col); }
  Cell cell(std::size_t index) const {
    return {static_cast<int>(index) / width, static_cast<int>(index) % width};
  }

  /// Where a move lands: blocked moves stay put.
  Cell move(Cell from, int action) const {
    const Cell to{from.row + kGridMoves[action].row, from.col + kGridMoves[action].col};
    return open(to) ? to : from;
  }

  /// Moves that leave the cell; empty for terminals.
  std::vector<std::size_t> legal_actions(Cell c) const {
    std::vector<std::size_t> out;
    if (is_terminal(c)) return out;
    for (int a = 0; a < kGridActions; ++a)
      if (!(move(c, a) == c)) out.push_back(static_cast<std::size_t>(a));
    return out;
  }

  /// Breadth-first distances from start, never expanding terminals.
  std::vector<int> distances() const {
    std::vector<int> dist(static_cast<std::size_t>(width * height), -1);
    std::queue<Cell> frontier;
    dist[index(start)] = 0;
    frontier.push(start);
    while (!frontier.empty()) {
      const Cell c = frontier.front();
      frontier.pop();
      if (is_terminal(c)) continue;
      for (int a = 0; a < kGridActions; ++a) {
        const Cell n = move(c, a);
        if (dist[index(n)] < 0) {
          dist[index(n)] = dist[index(c)] + 1;
          frontier.push(n);
        }
      }
    }
    return dist;
  }

  void validate() const {
    if (width <= 0 || height <= 0) throw ConfigError("grid dimensions must be positive");
    if (!open(start) || is_terminal(start)) throw ConfigError("start must be an open non-terminal cell");
    if (!terminals.contains(goal)) throw ConfigError("goal must be a terminal cell");
    const auto dist = distances();
    for (const auto& [cell, reward] : terminals) {
      if (!open(cell) || dist[index(cell)] < 0) {
        throw ConfigError("terminal (" + std::to_string(cell.row) + "," + std::to_string(cell.col) +
                          ") is unreachable from start");
      }
    }
  }
};

/// 3 x 4 grid: start bottom-left, wall at (1,1), goal +1 top-right, trap -1
/// below the goal, -0.1 per move.
inline GridLayout maze_runner_layout() {
  GridLayout g;
  g.height = 3;
  g.width = 4;
  g.start = {2, 0};
  g.goal = {0, 3};
  g.walls = {{1, 1}};
  g.terminals = {{{0, 3}, 1.0}, {{1, 3}, -1.0}};
  g.step_penalty = -0.1;
  return g;
}

/// 4 x 12 grid: start bottom-left, goal +10 bottom-right, the ten cells
/// between them are cliff (-100, terminal), -1 per move.
inline GridLayout cliff_walker_layout() {
  GridLayout g;
  g.height = 4;
  g.width = 12;
  g.start = {3, 0};
  g.goal = {3, 11};
  g.terminals[{3, 11}] = 10.0;
  for (int c = 1; c <= 10; ++c) g.terminals[{3, c}] = -100.0;
  g.step_penalty = -1.0;
  return g;
}

/// Deterministic gridworld. The observation is the single value
/// row * width + col. Entering a terminal cell pays that cell's reward and
/// ends the episode; every other move (blocked ones included) pays the step
/// penalty.
class GridWorld final : public Environment {
 public:
  GridWorld(std::string name, GridLayout layout, std::size_t max_steps, std::uint64_t seed)
      : Environment(seed), layout_(std::move(layout)) {
    layout_.validate();
    spec_.name = std::move(name);
    spec_.observation_dim = 1;
    spec_.action_count = kGridActions;
    spec_.max_steps = max_steps;
    spec_.state_count = static_cast<std::size_t>(layout_.width * layout_.height);
    spec_.rewards["step"] = layout_.step_penalty;
    spec_.rewards["goal"] = layout_.terminals.at(layout_.goal);
    for (const auto& [cell, r] : layout_.terminals)
      if (!(cell == layout_.goal)) spec_.rewards["terminal"] = r;
    if (max_steps == 0) throw ConfigError("max_steps must be >= 1");
  }

  const EnvSpec& spec() const override { return spec_; }
  const GridLayout& layout() const noexcept { return layout_; }
  Cell position() const noexcept { return pos_; }

  std::vector<std::size_t> legal_actions() const override { return layout_.legal_actions(pos_); }

 protected:
  Observation do_reset(Rng&) override {
    pos_ = layout_.start;
    return {static_cast<double>(layout_.index(pos_))};
  }

  Observation do_step(std::size_t action, double& reward, bool& terminal) override {
    pos_ = layout_.move(pos_, static_cast<int>(action));
    if (const auto it = layout_.terminals.find(pos_); it != layout_.terminals.end()) {
      reward = it->second;
      terminal = true;
    } else {
      reward = layout_.step_penalty;
    }
    return {static_cast<double>(layout_.index(pos_))};
  }

 private:
  GridLayout layout_;
  EnvSpec spec_;
  Cell pos_;
};

}  // namespace drl
