#pragma once

#include <algorithm>
#include <cstdint>

#include "drl/environment.hpp"
#include "drl/error.hpp"

namespace drl {

/// Catch on a 12 x 12 logical grid rendered at 7 px per cell (84 x 84 RGB).
/// An object falls one row per move from a random column of the top row; the
/// paddle sits on the bottom row. Actions: 0 left, 1 stay, 2 right. When the
/// object reaches the bottom row the move pays +1 (paddle under it) or -1,
/// and a new object spawns. An episode is 10 drops of 11 moves.
///
/// The world moves once every `ticks_per_move` steps, using the action of
/// the step on which it moves; the steps in between pay nothing. The default
/// of 4 matches an agent that repeats each action for 4 frames, so each
/// decision is exactly one move.
class PixelCatch final : public Environment {
 public:
  static constexpr int kGrid = 12;
  static constexpr int kCell = 7;
  static constexpr int kSide = kGrid * kCell;
  static constexpr int kDrops = 10;
  static constexpr int kStepsPerDrop = kGrid - 1;
  static constexpr std::uint8_t kObjectRgb[3] = {255, 255, 255};
  static constexpr std::uint8_t kPaddleRgb[3] = {0, 255, 0};

  explicit PixelCatch(std::uint64_t seed, int ticks_per_move = 4) : Environment(seed), ticks_per_move_(ticks_per_move) {
    if (ticks_per_move < 1) throw ConfigError("pixel_catch: ticks_per_move must be >= 1");
    spec_.name = "pixel_catch";
    spec_.observation_dim = 3;
    spec_.frame_shape = Shape3{3, kSide, kSide};
    spec_.action_count = 3;
    spec_.max_steps = static_cast<std::size_t>(kDrops * kStepsPerDrop * ticks_per_move);
    spec_.rewards["catch"] = 1.0;
    spec_.rewards["miss"] = -1.0;
  }

  const EnvSpec& spec() const override { return spec_; }

  int object_row() const noexcept { return object_row_; }
  int object_col() const noexcept { return object_col_; }
  int paddle_col() const noexcept { return paddle_col_; }
  int drops() const noexcept { return drops_; }
  int ticks_per_move() const noexcept { return ticks_per_move_; }
  /// True when the next step() moves the world.
  bool moves_next() const noexcept { return (tick_ + 1) % ticks_per_move_ == 0; }

  RgbFrame render_frame() const override {
    RgbFrame f(kSide, kSide, 0);
    paint(f, object_row_, object_col_, kObjectRgb);
    paint(f, kGrid - 1, paddle_col_, kPaddleRgb);
    return f;
  }

 protected:
  Observation do_reset(Rng& rng) override {
    drops_ = 0;
    tick_ = 0;
    paddle_col_ = kGrid / 2 - 1;
    spawn(rng);
    return observe();
  }

  Observation do_step(std::size_t action, double& reward, bool& terminal) override {
    reward = 0.0;
    terminal = false;
    if (++tick_ % ticks_per_move_ != 0) return observe();
    paddle_col_ = std::clamp(paddle_col_ + static_cast<int>(action) - 1, 0, kGrid - 1);
    ++object_row_;
    if (object_row_ == kGrid - 1) {
      reward = object_col_ == paddle_col_ ? 1.0 : -1.0;
      ++drops_;
      if (drops_ >= kDrops) {
        terminal = true;
      } else {
        spawn(episode_rng());
      }
    }
    return observe();
  }

 private:
  void spawn(Rng& rng) {
    object_row_ = 0;
    object_col_ = static_cast<int>(rng.uniform_index(kGrid));
  }

  Observation observe() const {
    return {static_cast<double>(object_row_), static_cast<double>(object_col_),
            static_cast<double>(paddle_col_)};
  }

  static void paint(RgbFrame& f, int row, int col, const std::uint8_t (&rgb)[3]) {
    for (int y = row * kCell; y < (row + 1) * kCell; ++y)
      for (int x = col * kCell; x < (col + 1) * kCell; ++x)
        for (std::size_t ch = 0; ch < 3; ++ch) f.at(y, x, ch) = rgb[ch];
  }

  EnvSpec spec_;
  int ticks_per_move_;
  int tick_ = 0;
  int object_row_ = 0;
  int object_col_ = 0;
  int paddle_col_ = 0;
  int drops_ = 0;
};

}  // namespace drl
