#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>

#include "drl/classic_control.hpp"
#include "drl/environment.hpp"
#include "drl/gridworld.hpp"
#include "drl/pixel_catch.hpp"

namespace drl {

inline constexpr std::array<std::string_view, 6> kEnvironmentNames = {
    "maze_runner", "cliff_walker", "cartpole", "mountaincar", "acrobot", "pixel_catch"};

inline std::unique_ptr<Environment> make_env(std::string_view name, std::uint64_t seed) {
  if (name == "maze_runner") return std::make_unique<GridWorld>("maze_runner", maze_runner_layout(), 100, seed);
  if (name == "cliff_walker") return std::make_unique<GridWorld>("cliff_walker", cliff_walker_layout(), 200, seed);
  if (name == "cartpole") return std::make_unique<CartPole>(seed);
  if (name == "mountaincar") return std::make_unique<MountainCar>(seed);
  if (name == "acrobot") return std::make_unique<Acrobot>(seed);
  if (name == "pixel_catch") return std::make_unique<PixelCatch>(seed);
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

}  // namespace drl
