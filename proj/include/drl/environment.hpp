#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drl/error.hpp"
#include "drl/layers.hpp"
#include "drl/rng.hpp"

namespace drl {

using Observation = std::vector<double>;

/// Height x width x 3 RGB image, row-major, interleaved channels.
struct RgbFrame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;

  RgbFrame() = default;
  RgbFrame(std::size_t h, std::size_t w, std::uint8_t fill = 0)
      : height(h), width(w), data(h * w * 3, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t ch) { return data[(y * width + x) * 3 + ch]; }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t ch) const {
    return data[(y * width + x) * 3 + ch];
  }
  friend bool operator==(const RgbFrame&, const RgbFrame&) = default;
};

struct EnvSpec {
  std::string name;
  std::size_t observation_dim = 0;
  std::optional<Shape3> frame_shape;  // native RGB frame (3 x h x w) for pixel games
  std::size_t action_count = 0;
  std::size_t max_steps = 0;
  std::size_t state_count = 0;  // > 0 for tabular (discrete-state) environments
  std::map<std::string, double> rewards;

  bool tabular() const noexcept { return state_count > 0; }
  bool pixel() const noexcept { return frame_shape.has_value(); }
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;  // done only because the step limit was hit
  std::size_t step = 0;
};

/// Uniform reset/step interface. Each instance is single-writer.
class Environment {
 public:
  explicit Environment(std::uint64_t seed) : seed_(seed) {}
  virtual ~Environment() = default;
  Environment(const Environment&) = default;
  Environment& operator=(const Environment&) = default;

  virtual const EnvSpec& spec() const = 0;

  /// Start state for the given episode seed; identical seeds give identical
  /// starts.
  Observation reset(std::uint64_t episode_seed) {
    rng_ = Rng(seed_).split(episode_seed);
    steps_ = 0;
    done_ = false;
    started_ = true;
    return do_reset(rng_);
  }

  StepResult step(std::size_t action) {
    if (!started_) throw ContractError(spec().name + ": step before reset");
    if (done_) throw ContractError(spec().name + ": step after episode end");
    if (action >= spec().action_count) {
      throw ContractError(spec().name + ": action " + std::to_string(action) + " out of range");
    }
    StepResult r;
    bool terminal = false;
    r.observation = do_step(action, r.reward, terminal);
    ++steps_;
    r.step = steps_;
    r.done = terminal || steps_ >= spec().max_steps;
    r.truncated = r.done && !terminal;
    done_ = r.done;
    return r;
  }

  /// Actions available in the current state. Every action is always legal
  /// to pass to step(); this lists the ones that actually go somewhere.
  virtual std::vector<std::size_t> legal_actions() const {
    std::vector<std::size_t> all(spec().action_count);
    for (std::size_t a = 0; a < all.size(); ++a) all[a] = a;
    return all;
  }

  virtual RgbFrame render_frame() const {
    throw ContractError(spec().name + " does not render frames");
  }

  bool done() const noexcept { return done_; }
  std::size_t steps() const noexcept { return steps_; }
  std::uint64_t seed() const noexcept { return seed_; }

 protected:
  virtual Observation do_reset(Rng& rng) = 0;
  Rng& episode_rng() noexcept { return rng_; }
  virtual Observation do_step(std::size_t action, double& reward, bool& terminal) = 0;

 private:
  std::uint64_t seed_;
  Rng rng_{0};
  std::size_t steps_ = 0;
  bool done_ = false;
  bool started_ = false;
};

}  // namespace drl
