#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drl/environment.hpp"
#include "drl/error.hpp"
#include "drl/rng.hpp"

namespace drl {

/// Greedy action, ties broken uniformly at random.
inline std::size_t argmax_random(std::span<const double> q, Rng& rng) {
  if (q.empty()) throw ContractError("argmax over empty action set");
  const double best = *std::max_element(q.begin(), q.end());
  std::size_t ties = 0;
  for (double v : q) ties += v == best;
  if (ties == 1) return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
  std::size_t pick = rng.uniform_index(ties);
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (q[a] == best && pick-- == 0) return a;
  }
  return 0;  // unreachable
}

/// Deterministic first-max; used for policy extraction.
inline std::size_t argmax_first(std::span<const double> q) {
  if (q.empty()) throw ContractError("argmax over empty action set");
  return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

inline std::size_t epsilon_greedy(std::span<const double> q_row, double epsilon, Rng& rng) {
  if (q_row.empty()) throw ContractError("epsilon_greedy: empty action set");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractError("epsilon_greedy: epsilon outside [0,1]");
  if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.uniform_index(q_row.size());
  return argmax_random(q_row, rng);
}

/// Selection restricted to the listed actions; an empty list means all.
inline std::size_t epsilon_greedy(std::span<const double> q_row, std::span<const std::size_t> allowed,
                                  double epsilon, Rng& rng) {
  if (allowed.empty()) return epsilon_greedy(q_row, epsilon, rng);
  std::vector<double> sub(allowed.size());
  for (std::size_t i = 0; i < allowed.size(); ++i) sub[i] = q_row[allowed[i]];
  return allowed[epsilon_greedy(sub, epsilon, rng)];
}

inline double max_over(std::span<const double> q_row, std::span<const std::size_t> allowed) {
  if (allowed.empty()) return *std::max_element(q_row.begin(), q_row.end());
  double best = q_row[allowed[0]];
  for (std::size_t a : allowed) best = std::max(best, q_row[a]);
  return best;
}

inline std::size_t argmax_first(std::span<const double> q_row, std::span<const std::size_t> allowed) {
  if (allowed.empty()) return argmax_first(q_row);
  std::size_t best = allowed[0];
  for (std::size_t a : allowed)
    if (q_row[a] > q_row[best]) best = a;
  return best;
}

inline std::vector<double> softmax_probabilities(std::span<const double> q_row, double temperature) {
  if (q_row.empty()) throw ContractError("softmax: empty action set");
  if (!(temperature > 0.0)) throw ContractError("softmax: temperature must be positive");
  const double top = *std::max_element(q_row.begin(), q_row.end());
  std::vector<double> p(q_row.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp((q_row[i] - top) / temperature);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

inline std::size_t softmax_policy(std::span<const double> q_row, double temperature, Rng& rng) {
  const auto p = softmax_probabilities(q_row, temperature);
  double u = rng.uniform();
  for (std::size_t a = 0; a + 1 < p.size(); ++a) {
    if (u < p[a]) return a;
    u -= p[a];
  }
  return p.size() - 1;
}

class QTable {
 public:
  QTable() = default;
  QTable(std::size_t states, std::size_t actions, double count_increment = 1.0)
      : states_(states), actions_(actions), increment_(count_increment), values_(states * actions, 0.0),
        counts_(states * actions, 0) {}

  /// Rebuilds a table from stored values and visit counts.
  QTable(std::size_t states, std::size_t actions, double count_increment, std::vector<double> values,
         std::vector<std::uint64_t> counts)
      : states_(states), actions_(actions), increment_(count_increment), values_(std::move(values)),
        counts_(std::move(counts)) {
    if (values_.size() != states * actions || counts_.size() != states * actions)
      throw ShapeError("QTable data does not match " + std::to_string(states) + "x" + std::to_string(actions));
  }

  std::size_t states() const noexcept { return states_; }
  std::size_t actions() const noexcept { return actions_; }
  double count_increment() const noexcept { return increment_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }

  double value(std::size_t s, std::size_t a) const { return values_.at(slot(s, a)); }
  double& value(std::size_t s, std::size_t a) { return values_.at(slot(s, a)); }
  std::uint64_t count(std::size_t s, std::size_t a) const { return counts_.at(slot(s, a)); }
  std::span<const double> row(std::size_t s) const { return {values_.data() + slot(s, 0), actions_}; }
  double max_value(std::size_t s) const {
    const auto r = row(s);
    return *std::max_element(r.begin(), r.end());
  }

  /// Divisor for the next update of (s,a): starts at 1 and grows by the
  /// count increment after each update.
  double divisor(std::size_t s, std::size_t a) const {
    return 1.0 + increment_ * static_cast<double>(counts_.at(slot(s, a)));
  }

  /// Q(s,a) += alpha0/divisor * (target - Q(s,a)); returns the applied change.
  double update(std::size_t s, std::size_t a, double target, double alpha0) {
    const std::size_t i = slot(s, a);
    const double delta = alpha0 / divisor(s, a) * (target - values_[i]);
    ++counts_[i];
    values_[i] += delta;
    return delta;
  }

 private:
  std::size_t slot(std::size_t s, std::size_t a) const {
    if (s >= states_ || a >= actions_) throw ContractError("QTable index out of range");
    return s * actions_ + a;
  }
  std::size_t states_ = 0;
  std::size_t actions_ = 0;
  double increment_ = 1.0;
  std::vector<double> values_;
  std::vector<std::uint64_t> counts_;
};

class VTable {
 public:
  explicit VTable(std::size_t states = 0) : values_(states, 0.0), counts_(states, 0) {}
  std::size_t states() const noexcept { return values_.size(); }
  double value(std::size_t s) const { return values_.at(s); }
  double& value(std::size_t s) { return values_.at(s); }
  std::uint64_t count(std::size_t s) const { return counts_.at(s); }
  std::uint64_t bump(std::size_t s) { return ++counts_.at(s); }

 private:
  std::vector<double> values_;
  std::vector<std::uint64_t> counts_;
};

struct TabularConfig {
  double gamma = 0.9;
  double alpha0 = 1.0;
  double t_epsilon = 1.0;
  double t_epsilon_increment = 0.005;
  std::size_t increment_every = 100;
  // Added to count(s,a) per update; 1 gives plain alpha0/k.
  double count_increment = 1.0;
  std::size_t episodes = 10000;
  // Overrides the 0.5/t schedule when set (used for greedy-limit checks).
  std::optional<double> fixed_epsilon;

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("tabular: gamma must be in (0,1]");
    if (!(alpha0 > 0.0)) throw ConfigError("tabular: alpha0 must be positive");
    if (!(t_epsilon > 0.0)) throw ConfigError("tabular: t_epsilon must be positive");
    if (t_epsilon_increment < 0.0) throw ConfigError("tabular: t_epsilon increment must be non-negative");
    if (!(count_increment >= 0.0)) throw ConfigError("tabular: count increment must be non-negative");
    if (increment_every == 0) throw ConfigError("tabular: increment_every must be positive");
    if (fixed_epsilon && !(*fixed_epsilon >= 0.0 && *fixed_epsilon <= 1.0))
      throw ConfigError("tabular: fixed epsilon outside [0,1]");
  }

  double epsilon_at(std::size_t episode) const {
    if (fixed_epsilon) return *fixed_epsilon;
    const double t = t_epsilon + t_epsilon_increment * static_cast<double>(episode / increment_every);
    return std::min(1.0, 0.5 / t);
  }
};

struct TabularResult {
  QTable q;
  std::vector<double> rewards;     // per-episode return
  std::vector<double> max_deltas;  // per-episode max |dQ|
  std::vector<std::size_t> lengths;
};

namespace detail {

inline std::size_t state_index(const Observation& o, std::size_t states) {
  if (o.size() != 1 || o[0] < 0.0 || static_cast<std::size_t>(o[0]) >= states)
    throw ContractError("tabular: observation is not a state index");
  return static_cast<std::size_t>(o[0]);
}

inline void require_tabular(const Environment& env) {
  if (!env.spec().tabular()) throw ContractError("tabular trainer needs a discrete-state environment: " + env.spec().name);
}

}  // namespace detail

struct TabularEpisode {
  double reward = 0.0;
  double max_delta = 0.0;  // largest |dQ| applied during the episode
  std::size_t length = 0;
};

/// One Q-learning episode (max bootstrap) with the schedule's epsilon for
/// that episode index; the episode index is also the reset seed.
inline TabularEpisode q_learning_episode(Environment& env, QTable& q, const TabularConfig& cfg, std::size_t ep,
                                         Rng& rng) {
  const std::size_t n_s = q.states();
  const double eps = cfg.epsilon_at(ep);
  std::size_t s = detail::state_index(env.reset(ep), n_s);
  TabularEpisode out;
  StepResult r;
  do {
    const std::size_t a = epsilon_greedy(q.row(s), env.legal_actions(), eps, rng);
    r = env.step(a);
    out.reward += r.reward;
    const std::size_t s2 = detail::state_index(r.observation, n_s);
    const bool terminal = r.done && !r.truncated;
    const double target = r.reward + (terminal ? 0.0 : cfg.gamma * max_over(q.row(s2), env.legal_actions()));
    out.max_delta = std::max(out.max_delta, std::abs(q.update(s, a, target, cfg.alpha0)));
    s = s2;
  } while (!r.done);
  out.length = r.step;
  return out;
}

/// One SARSA episode; the bootstrap action is the one executed next.
inline TabularEpisode sarsa_episode(Environment& env, QTable& q, const TabularConfig& cfg, std::size_t ep, Rng& rng) {
  const std::size_t n_s = q.states();
  const double eps = cfg.epsilon_at(ep);
  std::size_t s = detail::state_index(env.reset(ep), n_s);
  std::size_t a = epsilon_greedy(q.row(s), env.legal_actions(), eps, rng);
  TabularEpisode out;
  StepResult r;
  do {
    r = env.step(a);
    out.reward += r.reward;
    const std::size_t s2 = detail::state_index(r.observation, n_s);
    const bool terminal = r.done && !r.truncated;
    double target = r.reward;
    std::size_t a2 = 0;
    if (!terminal) {
      a2 = epsilon_greedy(q.row(s2), env.legal_actions(), eps, rng);
      target += cfg.gamma * q.value(s2, a2);
    }
    out.max_delta = std::max(out.max_delta, std::abs(q.update(s, a, target, cfg.alpha0)));
    s = s2;
    a = a2;
  } while (!r.done);
  out.length = r.step;
  return out;
}

namespace detail {

template <typename EpisodeFn>
TabularResult tabular_train(Environment& env, const TabularConfig& cfg, Rng& rng, EpisodeFn episode) {
  require_tabular(env);
  cfg.validate();
  TabularResult out{QTable(env.spec().state_count, env.spec().action_count, cfg.count_increment), {}, {}, {}};
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    const TabularEpisode e = episode(env, out.q, cfg, ep, rng);
    out.rewards.push_back(e.reward);
    out.max_deltas.push_back(e.max_delta);
    out.lengths.push_back(e.length);
  }
  return out;
}

}  // namespace detail

inline TabularResult q_learning_train(Environment& env, const TabularConfig& cfg, Rng& rng) {
  return detail::tabular_train(env, cfg, rng, q_learning_episode);
}

inline TabularResult sarsa_train(Environment& env, const TabularConfig& cfg, Rng& rng) {
  return detail::tabular_train(env, cfg, rng, sarsa_episode);
}

using TabularPolicy = std::function<std::size_t(std::size_t state, Rng& rng)>;

struct Td0Config {
  double alpha = 0.1;
  double gamma = 0.9;
  std::size_t episodes = 1000;
  bool harmonic_alpha = false;  // alpha/k on the k-th visit of a state
};

/// Policy evaluation, V(s) += alpha (r + gamma V(s') - V(s)) after every step.
inline VTable td0_evaluate(Environment& env, const TabularPolicy& policy, const Td0Config& cfg, Rng& rng) {
  detail::require_tabular(env);
  if (!policy) throw ContractError("td0_evaluate: no policy");
  if (!(cfg.alpha > 0.0) || !(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) throw ConfigError("td0_evaluate: bad alpha/gamma");
  const std::size_t n_s = env.spec().state_count;
  VTable v(n_s);
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    std::size_t s = detail::state_index(env.reset(ep), n_s);
    StepResult r;
    do {
      r = env.step(policy(s, rng));
      const std::size_t s2 = detail::state_index(r.observation, n_s);
      const bool terminal = r.done && !r.truncated;
      const double target = r.reward + (terminal ? 0.0 : cfg.gamma * v.value(s2));
      const double k = static_cast<double>(v.bump(s));
      const double alpha = cfg.harmonic_alpha ? cfg.alpha / k : cfg.alpha;
      v.value(s) += alpha * (target - v.value(s));
      s = s2;
    } while (!r.done);
  }
  return v;
}

struct GreedyRollout {
  std::vector<std::size_t> states;  // includes the start state
  double reward = 0.0;
  bool terminated = false;  // ended in a terminal state rather than the step cap
  std::size_t length() const { return states.empty() ? 0 : states.size() - 1; }
};

/// Follows argmax Q (first maximum) from the start state.
inline GreedyRollout greedy_rollout(Environment& env, const QTable& q, std::uint64_t episode_seed = 0) {
  detail::require_tabular(env);
  GreedyRollout out;
  std::size_t s = detail::state_index(env.reset(episode_seed), q.states());
  out.states.push_back(s);
  StepResult r;
  do {
    r = env.step(argmax_first(q.row(s), env.legal_actions()));
    s = detail::state_index(r.observation, q.states());
    out.states.push_back(s);
    out.reward += r.reward;
  } while (!r.done);
  out.terminated = !r.truncated;
  return out;
}

}  // namespace drl
