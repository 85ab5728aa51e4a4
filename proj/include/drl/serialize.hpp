#pragma once

#include <set>
#include <string>

#include "json.hpp"

#include "drl/agents.hpp"
#include "drl/network.hpp"
#include "drl/tabular.hpp"

namespace drl {

using Json = nlohmann::ordered_json;

namespace detail {

// Rejects keys outside `allowed` so typos in config files do not pass
// silently.
inline void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw ConfigError("unknown key '" + k + "' in " + std::string(what));
  }
}

template <typename T>
void read(const Json& j, std::string_view key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "': " + e.what());
  }
}

template <typename T>
T require(const Json& j, std::string_view key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError("missing key '" + std::string(key) + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "': " + e.what());
  }
}

}  // namespace detail

// --- matrices and networks -------------------------------------------------

inline Json to_json(const Matrix& m) {
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

inline Matrix matrix_from_json(const Json& j) {
  const auto rows = detail::require<std::size_t>(j, "rows");
  const auto cols = detail::require<std::size_t>(j, "cols");
  return Matrix(rows, cols, detail::require<std::vector<double>>(j, "data"));
}

inline Json to_json(const LayerSpec& s) {
  Json j{{"kind", to_string(s.kind)}};
  switch (s.kind) {
    case LayerKind::Dense:
      j["units"] = s.units;
      j["activation"] = to_string(s.activation);
      break;
    case LayerKind::Conv:
      j["filters"] = s.filters;
      j["kernel_h"] = s.kernel_h;
      j["kernel_w"] = s.kernel_w;
      j["stride"] = s.stride;
      j["padding"] = s.padding;
      j["activation"] = to_string(s.activation);
      break;
    case LayerKind::Pool:
      j["pool"] = to_string(s.pool);
      j["window"] = s.window;
      j["stride"] = s.stride;
      break;
  }
  return j;
}

inline LayerSpec layer_spec_from_json(const Json& j) {
  detail::check_keys(j, {"kind", "units", "activation", "filters", "kernel", "kernel_h", "kernel_w", "stride", "padding",
                         "pool", "window"},
                     "layer");
  LayerSpec s;
  s.kind = layer_kind_from_string(detail::require<std::string>(j, "kind"));
  detail::read(j, "units", s.units);
  detail::read(j, "filters", s.filters);
  if (j.contains("kernel")) s.kernel_h = s.kernel_w = detail::require<std::size_t>(j, "kernel");
  detail::read(j, "kernel_h", s.kernel_h);
  detail::read(j, "kernel_w", s.kernel_w);
  detail::read(j, "stride", s.stride);
  detail::read(j, "padding", s.padding);
  detail::read(j, "window", s.window);
  if (j.contains("activation")) s.activation = activation_from_string(detail::require<std::string>(j, "activation"));
  if (j.contains("pool")) s.pool = pool_kind_from_string(detail::require<std::string>(j, "pool"));
  return s;
}

inline Json to_json(const ArchitectureSpec& a) {
  Json layers = Json::array();
  for (const auto& l : a.layers) layers.push_back(to_json(l));
  return Json{{"input", {a.input.channels, a.input.height, a.input.width}}, {"layers", layers}};
}

inline ArchitectureSpec architecture_from_json(const Json& j) {
  detail::check_keys(j, {"input", "layers"}, "architecture");
  const auto in = detail::require<std::vector<std::size_t>>(j, "input");
  if (in.size() != 3) throw ConfigError("architecture input must be [channels, height, width]");
  ArchitectureSpec a{{in[0], in[1], in[2]}, {}};
  for (const auto& l : detail::require<Json>(j, "layers")) a.layers.push_back(layer_spec_from_json(l));
  return a;
}

/// Architecture, backend, and every weight, bias and feedback matrix in
/// layer order.
inline Json to_json(const Network& net) {
  Json params = Json::array();
  for (const auto& layer : net.layers()) {
    Json p = Json::object();
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (!std::is_same_v<T, PoolLayer>) {
            p["weights"] = to_json(l.weights);
            p["bias"] = to_json(l.bias);
          }
          if constexpr (std::is_same_v<T, DenseLayer>) {
            if (l.feedback) p["feedback"] = to_json(*l.feedback);
          }
        },
        layer);
    params.push_back(std::move(p));
  }
  return Json{{"architecture", to_json(net.architecture())}, {"backend", to_string(net.backend())}, {"layers", params}};
}

inline Network network_from_json(const Json& j) {
  const ArchitectureSpec arch = architecture_from_json(detail::require<Json>(j, "architecture"));
  const Backend backend = backend_from_string(detail::require<std::string>(j, "backend"));
  std::vector<Layer> layers = Network::allocate(arch, backend);
  const Json& params = detail::require<Json>(j, "layers");
  if (!params.is_array() || params.size() != layers.size())
    throw ArchitectureError("stored parameters do not match the architecture's layer count");
  auto load = [](Matrix& dst, const Json& src, const char* what) {
    Matrix m = matrix_from_json(src);
    if (!m.same_shape(dst)) throw ArchitectureError(std::string("stored ") + what + " " + m.shape() + ", expected " + dst.shape());
    dst = std::move(m);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::visit(
        [&](auto& layer) {
          using T = std::decay_t<decltype(layer)>;
          if constexpr (!std::is_same_v<T, PoolLayer>) {
            load(layer.weights, detail::require<Json>(params[l], "weights"), "weights");
            load(layer.bias, detail::require<Json>(params[l], "bias"), "bias");
          }
          if constexpr (std::is_same_v<T, DenseLayer>) {
            if (params[l].contains("feedback")) {
              Matrix fb = matrix_from_json(params[l]["feedback"]);
              if (fb.rows() != layer.outputs() || fb.cols() != arch.layers.back().units)
                throw ArchitectureError("stored feedback matrix has the wrong shape");
              layer.feedback = std::move(fb);
            } else if (backend == Backend::DFA && l + 1 < layers.size()) {
              throw ArchitectureError("DFA network is missing a feedback matrix");
            }
          }
        },
        layers[l]);
  }
  return Network(arch, backend, std::move(layers));
}

// --- configs ---------------------------------------------------------------

inline Json to_json(const EpsilonSchedule& s) {
  if (s.kind == EpsilonSchedule::Kind::PowerLaw) return Json{{"kind", "power_law"}, {"initial", s.initial}};
  return Json{{"kind", "linear"}, {"initial", s.initial}, {"final", s.final_value}, {"final_frame", s.final_frame}};
}

inline EpsilonSchedule schedule_from_json(const Json& j, EpsilonSchedule s) {
  detail::check_keys(j, {"kind", "initial", "final", "final_frame"}, "epsilon_schedule");
  if (j.contains("kind")) {
    const auto k = detail::require<std::string>(j, "kind");
    if (k == "power_law") s.kind = EpsilonSchedule::Kind::PowerLaw;
    else if (k == "linear") s.kind = EpsilonSchedule::Kind::LinearAnneal;
    else throw ConfigError("unknown epsilon schedule '" + k + "' (power_law|linear)");
  }
  detail::read(j, "initial", s.initial);
  detail::read(j, "final", s.final_value);
  detail::read(j, "final_frame", s.final_frame);
  return s;
}

inline Json to_json(const AgentConfig& c) {
  Json j{{"alpha", c.alpha},
         {"beta", c.beta},
         {"gamma", c.gamma},
         {"epsilon_opt", c.epsilon_opt},
         {"copy_period", c.copy_period},
         {"training_penalty", c.training_penalty},
         {"episodes", c.episodes},
         {"minibatch", c.minibatch},
         {"replay_capacity", c.replay_capacity},
         {"replay_start", c.replay_start},
         {"epsilon_schedule", to_json(c.epsilon_schedule)},
         {"reward_clip", c.reward_clip ? Json(*c.reward_clip) : Json(nullptr)},
         {"eval_epsilon", c.eval_epsilon},
         {"softmax_temperature", c.softmax_temperature},
         {"hidden", c.hidden},
         {"action_repeat", c.action_repeat},
         {"history", c.history},
         {"frame_side", c.frame_side},
         {"crop", {c.crop.top, c.crop.left, c.crop.height, c.crop.width}},
         {"architecture", c.architecture ? to_json(*c.architecture) : Json(nullptr)}};
  return j;
}

/// Fields present in j override `c`; backend and policy live at run level.
inline AgentConfig agent_config_from_json(const Json& j, AgentConfig c) {
  detail::check_keys(j, {"alpha", "beta", "gamma", "epsilon_opt", "copy_period", "training_penalty", "episodes",
                         "minibatch", "replay_capacity", "replay_start", "epsilon_schedule", "reward_clip",
                         "eval_epsilon", "softmax_temperature", "hidden", "action_repeat", "history", "frame_side",
                         "crop", "architecture"},
                     "agent_config");
  detail::read(j, "alpha", c.alpha);
  detail::read(j, "beta", c.beta);
  detail::read(j, "gamma", c.gamma);
  detail::read(j, "epsilon_opt", c.epsilon_opt);
  detail::read(j, "copy_period", c.copy_period);
  detail::read(j, "training_penalty", c.training_penalty);
  detail::read(j, "episodes", c.episodes);
  detail::read(j, "minibatch", c.minibatch);
  detail::read(j, "replay_capacity", c.replay_capacity);
  detail::read(j, "replay_start", c.replay_start);
  if (j.contains("epsilon_schedule")) c.epsilon_schedule = schedule_from_json(j["epsilon_schedule"], c.epsilon_schedule);
  if (j.contains("reward_clip")) {
    if (j["reward_clip"].is_null()) c.reward_clip.reset();
    else c.reward_clip = detail::require<double>(j, "reward_clip");
  }
  detail::read(j, "eval_epsilon", c.eval_epsilon);
  detail::read(j, "softmax_temperature", c.softmax_temperature);
  detail::read(j, "hidden", c.hidden);
  detail::read(j, "action_repeat", c.action_repeat);
  detail::read(j, "history", c.history);
  detail::read(j, "frame_side", c.frame_side);
  if (j.contains("crop")) {
    const auto v = detail::require<std::vector<std::size_t>>(j, "crop");
    if (v.size() != 4) throw ConfigError("crop must be [top, left, height, width]");
    c.crop = {v[0], v[1], v[2], v[3]};
  }
  if (j.contains("architecture")) {
    if (j["architecture"].is_null()) c.architecture.reset();
    else c.architecture = architecture_from_json(j["architecture"]);
  }
  return c;
}

inline Json to_json(const TabularConfig& c) {
  return Json{{"gamma", c.gamma},
              {"alpha0", c.alpha0},
              {"t_epsilon", c.t_epsilon},
              {"t_epsilon_increment", c.t_epsilon_increment},
              {"increment_every", c.increment_every},
              {"count_increment", c.count_increment},
              {"episodes", c.episodes},
              {"fixed_epsilon", c.fixed_epsilon ? Json(*c.fixed_epsilon) : Json(nullptr)}};
}

inline TabularConfig tabular_config_from_json(const Json& j, TabularConfig c) {
  detail::check_keys(j, {"gamma", "alpha0", "t_epsilon", "t_epsilon_increment", "increment_every", "count_increment",
                         "episodes", "fixed_epsilon"},
                     "tabular_config");
  detail::read(j, "gamma", c.gamma);
  detail::read(j, "alpha0", c.alpha0);
  detail::read(j, "t_epsilon", c.t_epsilon);
  detail::read(j, "t_epsilon_increment", c.t_epsilon_increment);
  detail::read(j, "increment_every", c.increment_every);
  detail::read(j, "count_increment", c.count_increment);
  detail::read(j, "episodes", c.episodes);
  if (j.contains("fixed_epsilon")) {
    if (j["fixed_epsilon"].is_null()) c.fixed_epsilon.reset();
    else c.fixed_epsilon = detail::require<double>(j, "fixed_epsilon");
  }
  return c;
}

inline Json to_json(const QTable& q) {
  return Json{{"states", q.states()},
              {"actions", q.actions()},
              {"count_increment", q.count_increment()},
              {"values", std::vector<double>(q.values().begin(), q.values().end())},
              {"counts", std::vector<std::uint64_t>(q.counts().begin(), q.counts().end())}};
}

inline QTable qtable_from_json(const Json& j) {
  return QTable(detail::require<std::size_t>(j, "states"), detail::require<std::size_t>(j, "actions"),
                detail::require<double>(j, "count_increment"), detail::require<std::vector<double>>(j, "values"),
                detail::require<std::vector<std::uint64_t>>(j, "counts"));
}

}  // namespace drl
