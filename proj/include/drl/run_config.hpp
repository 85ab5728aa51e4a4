#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "drl/agents.hpp"
#include "drl/environments.hpp"
#include "drl/serialize.hpp"
#include "drl/tabular.hpp"

namespace drl {

enum class AgentKind { TabularQ, TabularSarsa, Dqn, Dsn };

inline std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::TabularQ: return "tabular-q";
    case AgentKind::TabularSarsa: return "tabular-sarsa";
    case AgentKind::Dqn: return "dqn";
    case AgentKind::Dsn: return "dsn";
  }
  return "?";
}

inline AgentKind agent_kind_from_string(std::string_view s) {
  if (s == "tabular-q") return AgentKind::TabularQ;
  if (s == "tabular-sarsa") return AgentKind::TabularSarsa;
  if (s == "dqn") return AgentKind::Dqn;
  if (s == "dsn") return AgentKind::Dsn;
  throw ConfigError("unknown agent kind '" + std::string(s) + "' (tabular-q|tabular-sarsa|dqn|dsn)");
}

inline bool is_tabular(AgentKind k) { return k == AgentKind::TabularQ || k == AgentKind::TabularSarsa; }
inline TdMode td_mode(AgentKind k) { return k == AgentKind::Dsn ? TdMode::Sarsa : TdMode::QLearning; }

struct EvalSchedule {
  std::size_t interval = 50;         // training episodes between frozen evaluations; 0 disables
  std::size_t episodes = 100;        // episodes per during-training evaluation
  std::size_t final_episodes = 1000;  // post-training evaluation

  friend bool operator==(const EvalSchedule&, const EvalSchedule&) = default;
};

inline const char* kOutputDirVariable = "DRL_OUTPUT_DIR";

struct RunConfig {
  std::string env = "cartpole";
  AgentKind agent = AgentKind::Dqn;
  AgentConfig deep = AgentConfig::classic_control();  // carries backend and policy
  TabularConfig tabular;
  std::uint64_t seed = 0;
  EvalSchedule eval;
  std::optional<std::uint64_t> frame_budget;  // stop training after this many environment frames
  std::string output_dir = "runs";

  /// Defaults for an environment: pixel games take the pixel agent values,
  /// gridworlds the tabular agent.
  static RunConfig defaults_for(std::string_view env) {
    RunConfig c;
    c.env = std::string(env);
    const auto probe = make_env(env, 0);
    if (probe->spec().pixel()) c.deep = AgentConfig::atari();
    if (probe->spec().tabular()) {
      c.agent = AgentKind::TabularQ;
      c.eval.interval = 0;
    }
    return c;
  }

  std::size_t episodes() const { return is_tabular(agent) ? tabular.episodes : deep.episodes; }

  /// env, agent kind, backend, policy and seed.
  std::string run_name() const {
    const std::string backend = is_tabular(agent) ? "table" : std::string(to_string(deep.backend));
    return env + "_" + std::string(to_string(agent)) + "_" + backend + "_" + std::string(to_string(deep.policy)) +
           "_s" + std::to_string(seed);
  }

  /// Throws ConfigError for anything that would fail later.
  void validate() const {
    const auto probe = make_env(env, 0);
    if (is_tabular(agent)) {
      tabular.validate();
      if (!probe->spec().tabular()) throw ConfigError(std::string(to_string(agent)) + " needs a gridworld, not " + env);
      if (deep.policy != PolicyKind::EpsilonGreedy) throw ConfigError("tabular agents use epsilon-greedy exploration");
    } else {
      deep.validate();
      if (probe->spec().pixel() && deep.backend == Backend::DFA)
        throw ConfigError("DFA is defined for dense networks only; pixel agents run BP");
      Rng rng(0);
      DeepAgent::create(deep, td_mode(agent), probe->spec(), rng);  // architecture/env agreement
    }
  }
};

inline Json to_json(const RunConfig& c) {
  return Json{{"env", c.env},
              {"agent", to_string(c.agent)},
              {"backend", to_string(c.deep.backend)},
              {"policy", to_string(c.deep.policy)},
              {"seed", c.seed},
              {"eval", {{"interval", c.eval.interval}, {"episodes", c.eval.episodes}, {"final_episodes", c.eval.final_episodes}}},
              {"frame_budget", c.frame_budget ? Json(*c.frame_budget) : Json(nullptr)},
              {"output_dir", c.output_dir},
              {"agent_config", to_json(c.deep)},
              {"tabular_config", to_json(c.tabular)}};
}

/// Missing fields take the defaults for the named environment.
inline RunConfig run_config_from_json(const Json& j) {
  detail::check_keys(j, {"env", "agent", "backend", "policy", "seed", "eval", "frame_budget", "output_dir",
                         "agent_config", "tabular_config"},
                     "run config");
  RunConfig c = RunConfig::defaults_for(j.contains("env") ? detail::require<std::string>(j, "env") : std::string("cartpole"));
  if (j.contains("agent")) {
    c.agent = agent_kind_from_string(detail::require<std::string>(j, "agent"));
    if (!is_tabular(c.agent) && !j.contains("eval")) c.eval = EvalSchedule{};
  }
  if (j.contains("backend")) c.deep.backend = backend_from_string(detail::require<std::string>(j, "backend"));
  if (j.contains("policy")) c.deep.policy = policy_from_string(detail::require<std::string>(j, "policy"));
  detail::read(j, "seed", c.seed);
  if (j.contains("eval")) {
    detail::check_keys(j["eval"], {"interval", "episodes", "final_episodes"}, "eval");
    detail::read(j["eval"], "interval", c.eval.interval);
    detail::read(j["eval"], "episodes", c.eval.episodes);
    detail::read(j["eval"], "final_episodes", c.eval.final_episodes);
  }
  if (j.contains("frame_budget") && !j["frame_budget"].is_null()) c.frame_budget = detail::require<std::uint64_t>(j, "frame_budget");
  detail::read(j, "output_dir", c.output_dir);
  if (j.contains("agent_config")) c.deep = agent_config_from_json(j["agent_config"], c.deep);
  if (j.contains("tabular_config")) c.tabular = tabular_config_from_json(j["tabular_config"], c.tabular);
  return c;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in, nullptr, true, true);  // comments allowed
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c = run_config_from_json(read_json_file(path));
  c.validate();
  return c;
}

/// DRL_OUTPUT_DIR, when set, replaces the configured output root.
inline std::filesystem::path output_root(const std::string& configured) {
  const char* env = std::getenv(kOutputDirVariable);
  if (env != nullptr && *env != '\0') return std::filesystem::path(env);
  return std::filesystem::path(configured);
}

inline std::filesystem::path run_directory(const RunConfig& c) { return output_root(c.output_dir) / c.run_name(); }

/// Write-then-rename so readers never see a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << contents;
    if (!out.flush()) throw Error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace drl
