#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "drl/environment.hpp"
#include "drl/error.hpp"
#include "drl/network.hpp"
#include "drl/optimizer.hpp"
#include "drl/preprocess.hpp"
#include "drl/replay.hpp"
#include "drl/rng.hpp"
#include "drl/tabular.hpp"

namespace drl {

enum class PolicyKind { EpsilonGreedy, Softmax };
enum class TdMode { QLearning, Sarsa };
enum class ActMode { Train, Eval };

inline std::string_view to_string(PolicyKind p) { return p == PolicyKind::Softmax ? "softmax" : "egreedy"; }
inline PolicyKind policy_from_string(std::string_view s) {
  if (s == "egreedy") return PolicyKind::EpsilonGreedy;
  if (s == "softmax") return PolicyKind::Softmax;
  throw ConfigError("unknown policy '" + std::string(s) + "' (egreedy|softmax)");
}

struct EpsilonSchedule {
  enum class Kind { PowerLaw, LinearAnneal };
  Kind kind = Kind::PowerLaw;
  double initial = 1.0;
  double final_value = 0.1;
  std::uint64_t final_frame = 500000;

  static EpsilonSchedule power_law(double initial = 1.0) { return {Kind::PowerLaw, initial, 0.0, 0}; }
  static EpsilonSchedule linear(double initial, double final_value, std::uint64_t final_frame) {
    return {Kind::LinearAnneal, initial, final_value, final_frame};
  }

  /// PowerLaw decays per episode: initial / sqrt(episode + 1).
  /// LinearAnneal interpolates over frames and then holds.
  double at(std::uint64_t episode, std::uint64_t frame) const {
    if (kind == Kind::PowerLaw) return initial / std::sqrt(static_cast<double>(episode) + 1.0);
    if (final_frame == 0 || frame >= final_frame) return final_value;
    const double f = static_cast<double>(frame) / static_cast<double>(final_frame);
    return initial + (final_value - initial) * f;
  }

  void validate() const {
    if (!(initial >= 0.0 && initial <= 1.0)) throw ConfigError("initial epsilon must lie in [0,1]");
    if (kind == Kind::LinearAnneal && !(final_value >= 0.0 && final_value <= 1.0))
      throw ConfigError("final epsilon must lie in [0,1]");
  }

  friend bool operator==(const EpsilonSchedule&, const EpsilonSchedule&) = default;
};

struct AgentConfig {
  double alpha = 1e-4;
  double beta = 0.99;
  double gamma = 0.99;
  double epsilon_opt = 1e-3;
  std::size_t copy_period = 200;
  double training_penalty = 0.0;
  std::size_t episodes = 1000;
  std::size_t minibatch = 32;
  std::size_t replay_capacity = 10000;
  std::size_t replay_start = 100;
  PolicyKind policy = PolicyKind::EpsilonGreedy;
  Backend backend = Backend::BP;
  EpsilonSchedule epsilon_schedule = EpsilonSchedule::power_law();
  std::optional<double> reward_clip;
  double eval_epsilon = 0.05;
  double softmax_temperature = 1.0;
  std::vector<std::size_t> hidden = {200, 200};
  // pixel agents
  std::size_t action_repeat = 1;
  std::size_t history = 4;
  std::size_t frame_side = 84;
  Crop crop;
  std::optional<ArchitectureSpec> architecture;  // overrides the default network

  /// Classical control defaults.
  static AgentConfig classic_control() { return {}; }

  /// Pixel defaults.
  static AgentConfig atari() {
    AgentConfig c;
    c.alpha = 2.5e-4;
    c.copy_period = 10000;
    c.replay_capacity = 500000;
    c.replay_start = 50000;
    c.epsilon_schedule = EpsilonSchedule::linear(1.0, 0.1, 500000);
    c.action_repeat = 4;
    c.episodes = 1000;
    return c;
  }

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("RMSprop decay must lie in [0, 1)");
    if (!(epsilon_opt > 0.0)) throw ConfigError("RMSprop epsilon must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    if (copy_period < 1) throw ConfigError("copy period must be >= 1");
    if (minibatch < 1) throw ConfigError("minibatch must be >= 1");
    if (minibatch > replay_start) throw ConfigError("minibatch must not exceed replay start size");
    if (replay_capacity < replay_start) throw ConfigError("replay capacity must be >= replay start size");
    if (reward_clip && !(*reward_clip > 0.0)) throw ConfigError("reward clip bound must be positive");
    if (!(eval_epsilon >= 0.0 && eval_epsilon <= 1.0)) throw ConfigError("eval epsilon must lie in [0,1]");
    if (!(softmax_temperature > 0.0)) throw ConfigError("softmax temperature must be positive");
    if (action_repeat < 1) throw ConfigError("action repeat must be >= 1");
    if (history < 1) throw ConfigError("history length must be >= 1");
    epsilon_schedule.validate();
  }
};

/// Online network, frozen target copy, optimizer state and replay memory.
class DeepAgent {
 public:
  DeepAgent(AgentConfig cfg, TdMode mode, Network online, bool pixel)
      : cfg_(std::move(cfg)),
        mode_(mode),
        online_(std::move(online)),
        target_(online_),
        opt_(OptState::for_network(online_, cfg_.beta, cfg_.epsilon_opt)),
        pixel_(pixel) {
    cfg_.validate();
    if (pixel_) {
      memory_ = FrameRingBuffer(cfg_.replay_capacity, cfg_.frame_side, cfg_.frame_side, cfg_.history);
    } else {
      memory_ = TransitionBuffer(cfg_.replay_capacity);
    }
  }

  static ArchitectureSpec default_architecture(const AgentConfig& cfg, const EnvSpec& env) {
    if (cfg.architecture) return *cfg.architecture;
    if (env.pixel()) return atari_architecture(env.action_count, cfg.history, cfg.frame_side);
    return dense_architecture(env.observation_dim, cfg.hidden, env.action_count);
  }

  /// Builds a fresh agent for an environment; pixel environments get the
  /// convolutional pipeline.
  static DeepAgent create(const AgentConfig& cfg, TdMode mode, const EnvSpec& env, Rng& init_rng) {
    cfg.validate();
    if (!env.pixel() && env.observation_dim == 0) throw ContractError("deep agents need an observation vector");
    const auto arch = default_architecture(cfg, env);
    const std::size_t in = arch.input.size();
    const std::size_t expect = env.pixel() ? cfg.history * cfg.frame_side * cfg.frame_side : env.observation_dim;
    if (in != expect)
      throw ArchitectureError("network input " + std::to_string(in) + " does not match environment input " +
                              std::to_string(expect));
    if (arch.layers.empty() || arch.layers.back().units != env.action_count)
      throw ArchitectureError("network output does not match the action count");
    return DeepAgent(cfg, mode, Network::build(arch, cfg.backend, init_rng), env.pixel());
  }

  const AgentConfig& config() const noexcept { return cfg_; }
  TdMode mode() const noexcept { return mode_; }
  bool pixel() const noexcept { return pixel_; }

  Network& online() noexcept { return online_; }
  const Network& online() const noexcept { return online_; }
  const Network& target() const noexcept { return target_; }
  OptState& optimizer() noexcept { return opt_; }
  const OptState& optimizer() const noexcept { return opt_; }

  TransitionBuffer& transitions() { return std::get<TransitionBuffer>(memory_); }
  const TransitionBuffer& transitions() const { return std::get<TransitionBuffer>(memory_); }
  FrameRingBuffer& frames() { return std::get<FrameRingBuffer>(memory_); }
  const FrameRingBuffer& frames() const { return std::get<FrameRingBuffer>(memory_); }

  std::size_t memory_size() const {
    return pixel_ ? frames().size() : transitions().size();
  }
  bool ready_to_train() const { return memory_size() >= cfg_.replay_start; }

  void sync_target() { clone_params(online_, target_); }

  /// Replaces both networks (checkpoint restore). Optimizer state restarts.
  void restore(const Network& online, const Network& target) {
    if (!same_architecture(online, online_) || !same_architecture(target, online_))
      throw ArchitectureError("restored networks do not match the agent architecture");
    clone_params(online, online_);
    clone_params(target, target_);
  }

  double current_epsilon() const { return cfg_.epsilon_schedule.at(episode, frames_seen); }

  std::uint64_t global_step = 0;  // gradient steps
  std::uint64_t episode = 0;      // completed training episodes
  std::uint64_t frames_seen = 0;  // environment frames during training

 private:
  AgentConfig cfg_;
  TdMode mode_;
  Network online_;
  Network target_;
  OptState opt_;
  bool pixel_;
  std::variant<TransitionBuffer, FrameRingBuffer> memory_{TransitionBuffer(1)};
};

inline std::vector<double> q_values(const Network& net, std::span<const double> state) {
  if (state.size() != net.input_size())
    throw ShapeError("state of size " + std::to_string(state.size()) + " for a network expecting " +
                     std::to_string(net.input_size()));
  const Matrix q = predict(net, Matrix::column(state));
  return std::vector<double>(q.data(), q.data() + q.size());
}

/// Train mode follows the configured schedule (uniform random until the
/// replay start size is reached); eval mode uses the fixed eval epsilon.
inline std::size_t select_action(const DeepAgent& agent, std::span<const double> state, ActMode mode, Rng& rng) {
  const auto& cfg = agent.config();
  const auto q = q_values(agent.online(), state);
  if (cfg.policy == PolicyKind::Softmax) {
    if (mode == ActMode::Train && !agent.ready_to_train()) return rng.uniform_index(q.size());
    return softmax_policy(q, cfg.softmax_temperature, rng);
  }
  double eps = cfg.eval_epsilon;
  if (mode == ActMode::Train) eps = agent.ready_to_train() ? agent.current_epsilon() : 1.0;
  return epsilon_greedy(q, eps, rng);
}

/// y_j = r_j if done_j, else r_j + gamma * (max_a' Q_c(s'_j, a') or Q_c(s'_j, a'_j)).
/// Only the target network is evaluated.
inline std::vector<double> compute_targets(const Network& target, const Matrix& next_states,
                                           std::span<const double> rewards, const std::vector<bool>& dones,
                                           double gamma, TdMode mode,
                                           std::optional<std::span<const std::size_t>> next_actions = {}) {
  const std::size_t k = rewards.size();
  if (dones.size() != k || next_states.cols() != k) throw ShapeError("compute_targets: batch sizes disagree");
  if (mode == TdMode::Sarsa) {
    if (!next_actions) throw ContractError("SARSA targets need the next actions");
    if (next_actions->size() != k) throw ShapeError("compute_targets: next action count disagrees");
  }
  const Matrix q_next = predict(target, next_states);
  std::vector<double> y(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (dones[j]) {
      y[j] = rewards[j];
      continue;
    }
    double boot;
    if (mode == TdMode::QLearning) {
      boot = q_next(0, j);
      for (std::size_t a = 1; a < q_next.rows(); ++a) boot = std::max(boot, q_next(a, j));
    } else {
      const std::size_t a = (*next_actions)[j];
      if (a >= q_next.rows()) throw ContractError("next action out of range");
      boot = q_next(a, j);
    }
    y[j] = rewards[j] + gamma * boot;
  }
  return y;
}

struct Minibatch {
  Matrix states;
  Matrix next_states;
  std::vector<std::size_t> actions;
  std::vector<std::size_t> next_actions;
  std::vector<double> rewards;
  std::vector<bool> dones;
};

inline Minibatch sample_minibatch(const DeepAgent& agent, Rng& rng) {
  const std::size_t k = agent.config().minibatch;
  Minibatch b;
  if (agent.pixel()) {
    auto fb = agent.frames().sample_states(k, rng);
    b.states = std::move(fb.states);
    b.next_states = std::move(fb.next_states);
    b.actions = std::move(fb.actions);
    b.next_actions = std::move(fb.next_actions);
    b.rewards = std::move(fb.rewards);
    b.dones = std::move(fb.dones);
    return b;
  }
  const auto& buf = agent.transitions();
  const auto idx = buf.sample_indices(k, rng);
  const std::size_t dim = buf.slot(idx[0]).s.size();
  b.states = Matrix(dim, k);
  b.next_states = Matrix(dim, k);
  for (std::size_t j = 0; j < k; ++j) {
    const Experience& e = buf.slot(idx[j]);
    if (e.s.size() != dim || e.s_next.size() != dim) throw ShapeError("stored states differ in size");
    for (std::size_t i = 0; i < dim; ++i) {
      b.states(i, j) = e.s[i];
      b.next_states(i, j) = e.s_next[i];
    }
    b.actions.push_back(e.a);
    b.rewards.push_back(e.r);
    b.dones.push_back(e.done);
    if (agent.mode() == TdMode::Sarsa) {
      if (!e.done && !e.a_next) throw ContractError("SARSA transition stored without a next action");
      b.next_actions.push_back(e.a_next.value_or(0));
    }
  }
  return b;
}

struct TrainStats {
  double loss = 0.0;  // mean squared TD error over the minibatch
  bool synced = false;
};

/// Gradient step on (y_j - Q(s_j, a_j))^2 for a given batch; the error on
/// non-selected outputs is zero.
inline TrainStats train_on_batch(DeepAgent& agent, const Minibatch& b) {
  const auto& cfg = agent.config();
  const std::size_t k = b.actions.size();
  std::optional<std::span<const std::size_t>> next;
  if (agent.mode() == TdMode::Sarsa) next = std::span<const std::size_t>(b.next_actions);
  const auto y = compute_targets(agent.target(), b.next_states, b.rewards, b.dones, cfg.gamma, agent.mode(), next);

  auto fwd = forward(agent.online(), b.states);
  Matrix d_out(fwd.output.rows(), k);
  TrainStats st;
  for (std::size_t j = 0; j < k; ++j) {
    if (b.actions[j] >= fwd.output.rows()) throw ContractError("stored action out of range");
    const double err = fwd.output(b.actions[j], j) - y[j];
    d_out(b.actions[j], j) = 2.0 * err;
    st.loss += err * err;
  }
  st.loss /= static_cast<double>(k);
  const Gradients g = backward(agent.online(), fwd.cache, d_out);
  rmsprop_step(agent.online(), g, agent.optimizer(), cfg.alpha);
  ++agent.global_step;
  if (agent.global_step % cfg.copy_period == 0) {
    agent.sync_target();
    st.synced = true;
  }
  return st;
}

inline TrainStats train_step(DeepAgent& agent, Rng& rng) {
  if (!agent.ready_to_train())
    throw ContractError("replay memory holds " + std::to_string(agent.memory_size()) + " entries, below the start size " +
                        std::to_string(agent.config().replay_start));
  return train_on_batch(agent, sample_minibatch(agent, rng));
}

/// Reward written to memory: penalty on early termination, then clipping.
inline double stored_reward(const AgentConfig& cfg, double reward, bool terminal, std::size_t step,
                            std::size_t max_steps) {
  double r = reward;
  if (terminal && step < max_steps) r += cfg.training_penalty;
  if (cfg.reward_clip) r = std::clamp(r, -*cfg.reward_clip, *cfg.reward_clip);
  return r;
}

namespace detail {

inline void require_vector_env(const DeepAgent& agent, const Environment& env) {
  if (agent.pixel() || env.spec().pixel()) throw ContractError("vector agent loop used with pixel agent or game");
  if (env.spec().observation_dim != agent.online().input_size())
    throw ArchitectureError("environment observation does not match the network input");
}

inline void require_pixel_env(const DeepAgent& agent, const Environment& env) {
  if (!agent.pixel() || !env.spec().pixel()) throw ContractError("pixel agent loop needs a pixel agent and game");
  if (env.spec().action_count != agent.online().output_size())
    throw ArchitectureError("game action count does not match the network output");
}

inline GrayFrame observe(const DeepAgent& agent, const Environment& env) {
  const auto& c = agent.config();
  return preprocess(env.render_frame(), c.crop, c.frame_side, c.frame_side);
}

struct RepeatResult {
  double reward = 0.0;
  bool done = false;
  bool terminal = false;
  std::size_t step = 0;
  std::size_t frames = 0;
};

inline RepeatResult repeat_action(Environment& env, std::size_t action, std::size_t repeat) {
  RepeatResult out;
  for (std::size_t i = 0; i < repeat; ++i) {
    const StepResult r = env.step(action);
    out.reward += r.reward;
    ++out.frames;
    out.step = r.step;
    if (r.done) {
      out.done = true;
      out.terminal = !r.truncated;
      break;
    }
  }
  return out;
}

}  // namespace detail

struct EpisodeOutcome {
  double reward = 0.0;  // unpenalized, unclipped
  std::size_t steps = 0;  // agent decisions
  std::size_t frames = 0;
  double mean_loss = 0.0;
};

/// One training episode on a vector-observation environment. Truncated
/// episodes bootstrap from the final state; only true terminals stop the
/// target.
inline EpisodeOutcome run_episode(DeepAgent& agent, Environment& env, std::uint64_t episode_seed, Rng& rng) {
  detail::require_vector_env(agent, env);
  const auto& cfg = agent.config();
  const bool sarsa = agent.mode() == TdMode::Sarsa;
  const std::size_t max_steps = env.spec().max_steps;
  EpisodeOutcome out;
  std::size_t trained = 0;

  Observation s = env.reset(episode_seed);
  std::size_t a = select_action(agent, s, ActMode::Train, rng);
  for (;;) {
    const StepResult r = env.step(a);
    out.reward += r.reward;
    ++out.steps;
    ++agent.frames_seen;
    const bool terminal = r.done && !r.truncated;

    Experience e{s, a, stored_reward(cfg, r.reward, terminal, r.step, max_steps), r.observation, terminal, {}};
    std::optional<std::size_t> a_next;
    if (!terminal && (sarsa || !r.done)) a_next = select_action(agent, r.observation, ActMode::Train, rng);
    if (sarsa) e.a_next = a_next;
    agent.transitions().push(std::move(e));

    if (agent.ready_to_train()) {
      out.mean_loss += train_step(agent, rng).loss;
      ++trained;
    }
    if (r.done) break;
    s = r.observation;
    a = *a_next;
  }
  ++agent.episode;
  out.frames = out.steps;
  if (trained) out.mean_loss /= static_cast<double>(trained);
  return out;
}

/// One training episode on a pixel game: preprocessed frames go to the
/// ring buffer, each decision is repeated action_repeat times.
inline EpisodeOutcome run_pixel_episode(DeepAgent& agent, Environment& env, std::uint64_t episode_seed, Rng& rng) {
  detail::require_pixel_env(agent, env);
  const auto& cfg = agent.config();
  const std::size_t max_steps = env.spec().max_steps;
  EpisodeOutcome out;
  std::size_t trained = 0;

  env.reset(episode_seed);
  GrayFrame frame = detail::observe(agent, env);
  FrameStack stack(cfg.history);
  stack.reset(frame);
  std::size_t a = select_action(agent, stack.state(), ActMode::Train, rng);
  for (;;) {
    const auto rr = detail::repeat_action(env, a, cfg.action_repeat);
    out.reward += rr.reward;
    out.frames += rr.frames;
    ++out.steps;
    agent.frames_seen += rr.frames;
    agent.frames().push(frame, a, stored_reward(cfg, rr.reward, rr.terminal, rr.step, max_steps), rr.done);

    std::optional<std::size_t> a_next;
    if (!rr.done) {
      frame = detail::observe(agent, env);
      stack.push(frame);
      a_next = select_action(agent, stack.state(), ActMode::Train, rng);
    }
    if (agent.ready_to_train() && agent.frames().has_valid()) {
      out.mean_loss += train_step(agent, rng).loss;
      ++trained;
    }
    if (rr.done) break;
    a = *a_next;
  }
  ++agent.episode;
  if (trained) out.mean_loss /= static_cast<double>(trained);
  return out;
}

inline EpisodeOutcome run_training_episode(DeepAgent& agent, Environment& env, std::uint64_t episode_seed, Rng& rng) {
  return agent.pixel() ? run_pixel_episode(agent, env, episode_seed, rng) : run_episode(agent, env, episode_seed, rng);
}

/// Frozen-parameter episode with eval-mode action selection. Nothing in the
/// agent changes.
inline double run_eval_episode(const DeepAgent& agent, Environment& env, std::uint64_t episode_seed, Rng& rng) {
  double total = 0.0;
  if (!agent.pixel()) {
    detail::require_vector_env(agent, env);
    Observation s = env.reset(episode_seed);
    for (;;) {
      const StepResult r = env.step(select_action(agent, s, ActMode::Eval, rng));
      total += r.reward;
      if (r.done) break;
      s = r.observation;
    }
    return total;
  }
  detail::require_pixel_env(agent, env);
  env.reset(episode_seed);
  FrameStack stack(agent.config().history);
  stack.reset(detail::observe(agent, env));
  for (;;) {
    const auto rr =
        detail::repeat_action(env, select_action(agent, stack.state(), ActMode::Eval, rng), agent.config().action_repeat);
    total += rr.reward;
    if (rr.done) break;
    stack.push(detail::observe(agent, env));
  }
  return total;
}

}  // namespace drl
