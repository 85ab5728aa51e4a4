#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include "drl/run_config.hpp"

namespace drl {

/// Q table plus the settings needed to keep training or evaluate it.
struct TabularAgent {
  TabularConfig config;
  QTable q{0, 0};
  double eval_epsilon = 0.05;
  std::uint64_t episode = 0;
};

using AnyAgent = std::variant<TabularAgent, DeepAgent>;

struct Checkpoint {
  AgentKind kind = AgentKind::Dqn;
  std::string env;
  std::uint64_t seed = 0;
  AnyAgent agent;
};

inline constexpr std::string_view kCheckpointMagic = "DRLCKPT";
inline constexpr int kCheckpointVersion = 1;

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Json checkpoint_body(const Checkpoint& ck) {
  Json j{{"kind", to_string(ck.kind)}, {"env", ck.env}, {"seed", ck.seed}};
  if (const auto* t = std::get_if<TabularAgent>(&ck.agent)) {
    j["tabular_config"] = to_json(t->config);
    j["eval_epsilon"] = t->eval_epsilon;
    j["counters"] = {{"episode", t->episode}};
    j["q"] = to_json(t->q);
  } else {
    const auto& a = std::get<DeepAgent>(ck.agent);
    j["agent_config"] = to_json(a.config());
    j["backend"] = to_string(a.config().backend);
    j["policy"] = to_string(a.config().policy);
    j["pixel"] = a.pixel();
    j["counters"] = {{"episode", a.episode}, {"global_step", a.global_step}, {"frames", a.frames_seen}};
    j["online"] = to_json(a.online());
    j["target"] = to_json(a.target());
  }
  return j;
}

/// Layout: one header line "DRLCKPT <version> <fnv1a64 hex> <body bytes>"
/// followed by a JSON body. Doubles are written with round-trip precision.
inline std::string serialize_checkpoint(const Checkpoint& ck) {
  const std::string body = checkpoint_body(ck).dump(1);
  char head[96];
  std::snprintf(head, sizeof head, "%s %d %016llx %zu\n", kCheckpointMagic.data(), kCheckpointVersion,
                static_cast<unsigned long long>(fnv1a64(body)), body.size());
  return head + body;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_atomic(path, serialize_checkpoint(ck));
}

inline Checkpoint parse_checkpoint(const std::string& text) {
  const auto nl = text.find('\n');
  if (nl == std::string::npos) throw ChecksumError("checkpoint header missing");
  std::istringstream head(text.substr(0, nl));
  std::string magic, hex;
  int version = 0;
  std::size_t length = 0;
  if (!(head >> magic >> version >> hex >> length) || magic != kCheckpointMagic)
    throw ChecksumError("not a checkpoint file");
  if (version != kCheckpointVersion)
    throw ChecksumError("checkpoint version " + std::to_string(version) + ", expected " +
                        std::to_string(kCheckpointVersion));
  const std::string_view body = std::string_view(text).substr(nl + 1);
  if (body.size() != length)
    throw ChecksumError("checkpoint truncated or padded: " + std::to_string(body.size()) + " of " +
                        std::to_string(length) + " bytes");
  char expect[17];
  std::snprintf(expect, sizeof expect, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
  if (hex != expect) throw ChecksumError("checkpoint checksum mismatch");

  Json j;
  try {
    j = Json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ChecksumError(std::string("checkpoint body unreadable: ") + e.what());
  }
  const AgentKind kind = agent_kind_from_string(detail::require<std::string>(j, "kind"));
  const auto env = detail::require<std::string>(j, "env");
  const auto seed = detail::require<std::uint64_t>(j, "seed");
  const Json& counters = detail::require<Json>(j, "counters");
  if (is_tabular(kind)) {
    TabularAgent t;
    t.config = tabular_config_from_json(detail::require<Json>(j, "tabular_config"), TabularConfig{});
    t.eval_epsilon = detail::require<double>(j, "eval_epsilon");
    t.episode = detail::require<std::uint64_t>(counters, "episode");
    t.q = qtable_from_json(detail::require<Json>(j, "q"));
    return Checkpoint{kind, env, seed, std::move(t)};
  }
  AgentConfig cfg = agent_config_from_json(detail::require<Json>(j, "agent_config"), AgentConfig{});
  cfg.backend = backend_from_string(detail::require<std::string>(j, "backend"));
  cfg.policy = policy_from_string(detail::require<std::string>(j, "policy"));
  Network online = network_from_json(detail::require<Json>(j, "online"));
  const Network target = network_from_json(detail::require<Json>(j, "target"));
  if (online.backend() != cfg.backend) throw ArchitectureError("checkpoint backend tag disagrees with its network");
  DeepAgent agent(cfg, td_mode(kind), std::move(online), detail::require<bool>(j, "pixel"));
  agent.restore(agent.online(), target);
  agent.episode = detail::require<std::uint64_t>(counters, "episode");
  agent.global_step = detail::require<std::uint64_t>(counters, "global_step");
  agent.frames_seen = detail::require<std::uint64_t>(counters, "frames");
  return Checkpoint{kind, env, seed, std::move(agent)};
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

/// Throws ArchitectureError when the agent cannot act in env.
inline void check_compatible(const AnyAgent& agent, const EnvSpec& env) {
  if (const auto* t = std::get_if<TabularAgent>(&agent)) {
    if (!env.tabular() || env.state_count != t->q.states() || env.action_count != t->q.actions())
      throw ArchitectureError("Q table " + std::to_string(t->q.states()) + "x" + std::to_string(t->q.actions()) +
                              " does not fit " + env.name);
    return;
  }
  const auto& a = std::get<DeepAgent>(agent);
  if (a.pixel() != env.pixel()) throw ArchitectureError("pixel/vector agent does not fit " + env.name);
  if (!a.pixel() && a.online().input_size() != env.observation_dim)
    throw ArchitectureError("network takes " + std::to_string(a.online().input_size()) + " inputs, " + env.name +
                            " observes " + std::to_string(env.observation_dim));
  if (a.online().output_size() != env.action_count)
    throw ArchitectureError("network has " + std::to_string(a.online().output_size()) + " outputs, " + env.name +
                            " has " + std::to_string(env.action_count) + " actions");
}

}  // namespace drl
