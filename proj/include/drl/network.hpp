#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "drl/activation.hpp"
#include "drl/error.hpp"
#include "drl/init.hpp"
#include "drl/layers.hpp"
#include "drl/matrix.hpp"
#include "drl/rng.hpp"

namespace drl {

enum class Backend { BP, DFA };

inline std::string_view to_string(Backend b) { return b == Backend::BP ? "bp" : "dfa"; }

inline Backend backend_from_string(std::string_view s) {
  if (s == "bp") return Backend::BP;
  if (s == "dfa") return Backend::DFA;
  throw ConfigError("unknown backend '" + std::string(s) + "'");
}

enum class LayerKind { Dense, Conv, Pool };

inline std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv: return "conv";
    case LayerKind::Pool: return "pool";
  }
  return "dense";
}

inline LayerKind layer_kind_from_string(std::string_view s) {
  if (s == "dense") return LayerKind::Dense;
  if (s == "conv") return LayerKind::Conv;
  if (s == "pool") return LayerKind::Pool;
  throw ConfigError("unknown layer kind '" + std::string(s) + "'");
}

/// Declarative description of one layer; enough to rebuild the network shape.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t units = 0;  // dense
  std::size_t filters = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t window = 2;  // pool
  PoolKind pool = PoolKind::Max;
  Activation activation = Activation::Linear;

  static LayerSpec dense(std::size_t units, Activation act) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.units = units;
    s.activation = act;
    return s;
  }
  static LayerSpec conv(std::size_t filters, std::size_t kernel, std::size_t stride,
                        Activation act, std::size_t padding = 0) {
    LayerSpec s;
    s.kind = LayerKind::Conv;
    s.filters = filters;
    s.kernel_h = s.kernel_w = kernel;
    s.stride = stride;
    s.padding = padding;
    s.activation = act;
    return s;
  }
  static LayerSpec pooling(PoolKind kind, std::size_t window, std::size_t stride) {
    LayerSpec s;
    s.kind = LayerKind::Pool;
    s.pool = kind;
    s.window = window;
    s.stride = stride;
    return s;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ArchitectureSpec {
  Shape3 input;
  std::vector<LayerSpec> layers;

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

/// in -> hidden... (ReLU) -> out (Linear). With hidden = {200, 200} this is
/// the classical-control Q network.
inline ArchitectureSpec dense_architecture(std::size_t inputs, const std::vector<std::size_t>& hidden,
                                           std::size_t outputs, Activation hidden_act = Activation::ReLU) {
  ArchitectureSpec a{{inputs, 1, 1}, {}};
  for (std::size_t h : hidden) a.layers.push_back(LayerSpec::dense(h, hidden_act));
  a.layers.push_back(LayerSpec::dense(outputs, Activation::Linear));
  return a;
}

/// 84x84x4 -> conv 32 8x8/4 -> conv 64 4x4/2 -> conv 64 3x3/1 (ReLU)
/// -> 512 Linear -> actions Linear.
inline ArchitectureSpec atari_architecture(std::size_t actions, std::size_t frames = 4,
                                           std::size_t side = 84) {
  ArchitectureSpec a{{frames, side, side}, {}};
  a.layers.push_back(LayerSpec::conv(32, 8, 4, Activation::ReLU));
  a.layers.push_back(LayerSpec::conv(64, 4, 2, Activation::ReLU));
  a.layers.push_back(LayerSpec::conv(64, 3, 1, Activation::ReLU));
  a.layers.push_back(LayerSpec::dense(512, Activation::Linear));
  a.layers.push_back(LayerSpec::dense(actions, Activation::Linear));
  return a;
}

using Layer = std::variant<DenseLayer, ConvLayer, PoolLayer>;

namespace detail {

// Fresh id on construction and on copy, so a cache built from one network
// cannot be replayed against a copy of it.
class InstanceTag {
 public:
  InstanceTag() : id_(next()) {}
  InstanceTag(const InstanceTag&) : id_(next()) {}
  InstanceTag& operator=(const InstanceTag&) {
    id_ = next();
    return *this;
  }
  InstanceTag(InstanceTag&&) noexcept = default;
  InstanceTag& operator=(InstanceTag&&) noexcept = default;
  std::uint64_t id() const noexcept { return id_; }

 private:
  static std::uint64_t next() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
  }
  std::uint64_t id_;
};

}  // namespace detail

class Network {
 public:
  /// Validates the architecture and draws Xavier weights, zero biases and
  /// (for DFA) fixed uniform feedback matrices from rng.
  static Network build(const ArchitectureSpec& spec, Backend backend, Rng& rng) {
    std::vector<Layer> layers = allocate(spec, backend);
    for (auto& layer : layers) {
      if (auto* d = std::get_if<DenseLayer>(&layer)) {
        d->weights = xavier_init(d->inputs(), d->outputs(), rng);
      } else if (auto* c = std::get_if<ConvLayer>(&layer)) {
        const std::size_t area = c->kernel_h * c->kernel_w;
        c->weights = xavier_init(c->filters, c->receptive_field(), c->receptive_field(),
                                 c->filters * area, rng);
      }
    }
    if (backend == Backend::DFA) {
      const std::size_t out = spec.layers.back().units;
      const double bound = 1.0 / std::sqrt(static_cast<double>(out));
      for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        auto& d = std::get<DenseLayer>(layers[i]);
        Matrix b(d.outputs(), out);
        for (double& v : b.values()) v = rng.uniform(-bound, bound);
        d.feedback = std::move(b);
      }
    }
    return Network(spec, backend, std::move(layers));
  }

  /// Zero-initialised layers of the right shapes. Throws on invalid specs.
  static std::vector<Layer> allocate(const ArchitectureSpec& spec, Backend backend) {
    if (spec.layers.empty()) throw ConfigError("network needs at least one layer");
    if (spec.input.size() == 0) throw ConfigError("network input size must be positive");
    const LayerSpec& last = spec.layers.back();
    if (last.kind != LayerKind::Dense || last.activation != Activation::Linear) {
      throw ConfigError("network must end in a dense linear output layer");
    }
    std::vector<Layer> layers;
    Shape3 shape = spec.input;
    bool seen_dense = false;
    for (const LayerSpec& ls : spec.layers) {
      switch (ls.kind) {
        case LayerKind::Dense: {
          if (ls.units == 0) throw ConfigError("dense layer needs units >= 1");
          seen_dense = true;
          DenseLayer d;
          d.weights = Matrix(ls.units, shape.size());
          d.bias = Matrix(ls.units, 1);
          d.activation = ls.activation;
          layers.emplace_back(std::move(d));
          shape = {ls.units, 1, 1};
          break;
        }
        case LayerKind::Conv: {
          if (seen_dense) throw ConfigError("conv layer after the flatten boundary");
          if (backend == Backend::DFA) throw ConfigError("DFA is defined for dense networks only");
          if (ls.filters == 0 || ls.kernel_h == 0 || ls.kernel_w == 0 || ls.stride == 0)
            throw ConfigError("conv layer needs filters, kernel and stride >= 1");
          ConvLayer c;
          c.input = shape;
          c.filters = ls.filters;
          c.kernel_h = ls.kernel_h;
          c.kernel_w = ls.kernel_w;
          c.stride = ls.stride;
          c.padding = ls.padding;
          c.activation = ls.activation;
          c.weights = Matrix(c.filters, c.receptive_field());
          c.bias = Matrix(c.filters, 1);
          shape = c.output();
          layers.emplace_back(std::move(c));
          break;
        }
        case LayerKind::Pool: {
          if (seen_dense) throw ConfigError("pool layer after the flatten boundary");
          if (backend == Backend::DFA) throw ConfigError("DFA is defined for dense networks only");
          if (ls.window == 0 || ls.stride == 0) throw ConfigError("pool window and stride must be >= 1");
          PoolLayer p;
          p.input = shape;
          p.window = ls.window;
          p.stride = ls.stride;
          p.kind = ls.pool;
          shape = p.output();
          layers.emplace_back(p);
          break;
        }
      }
    }
    return layers;
  }

  Network(ArchitectureSpec spec, Backend backend, std::vector<Layer> layers)
      : spec_(std::move(spec)), backend_(backend), layers_(std::move(layers)) {
    if (layers_.size() != spec_.layers.size()) throw ArchitectureError("layer count mismatch");
  }

  const ArchitectureSpec& architecture() const noexcept { return spec_; }
  Backend backend() const noexcept { return backend_; }
  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::size_t input_size() const noexcept { return spec_.input.size(); }
  std::size_t output_size() const noexcept { return spec_.layers.back().units; }

  std::uint64_t id() const noexcept { return tag_.id(); }
  /// Bumped by every parameter update; caches remember the version they saw.
  std::uint64_t version() const noexcept { return version_; }
  void touch() noexcept { ++version_; }

  /// Number of forward passes run through this instance.
  std::uint64_t forward_count() const noexcept { return forward_count_; }
  void count_forward() const noexcept { ++forward_count_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) {
      if (const auto* d = std::get_if<DenseLayer>(&l)) n += d->weights.size() + d->bias.size();
      if (const auto* c = std::get_if<ConvLayer>(&l)) n += c->weights.size() + c->bias.size();
    }
    return n;
  }

 private:
  ArchitectureSpec spec_;
  Backend backend_ = Backend::BP;
  std::vector<Layer> layers_;
  detail::InstanceTag tag_;
  std::uint64_t version_ = 0;
  mutable std::uint64_t forward_count_ = 0;
};

/// Calls fn(weights, bias) for every parameterised layer, in layer order.
template <typename Net, typename Fn>
void for_each_parameter(Net& net, Fn&& fn) {
  for (auto& layer : net.layers()) {
    std::visit(
        [&](auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (!std::is_same_v<T, PoolLayer>) fn(l.weights, l.bias);
        },
        layer);
  }
}

struct LayerCache {
  Matrix z;  // pre-activation (empty for pooling)
  Matrix a;  // activation
  Matrix columns;
  std::vector<std::size_t> argmax;
};

struct ForwardCache {
  Matrix input;
  std::vector<LayerCache> layers;
  std::uint64_t network_id = 0;
  std::uint64_t network_version = 0;

  const Matrix& activation_before(std::size_t l) const { return l == 0 ? input : layers[l - 1].a; }
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

inline ForwardResult forward(const Network& net, const Matrix& input) {
  if (input.rows() != net.input_size()) {
    throw ShapeError("forward: input " + input.shape() + " but network expects " +
                     std::to_string(net.input_size()) + " features");
  }
  net.count_forward();
  ForwardResult r;
  r.cache.input = input;
  r.cache.network_id = net.id();
  r.cache.network_version = net.version();
  r.cache.layers.reserve(net.layers().size());
  for (const auto& layer : net.layers()) {
    const Matrix& x = r.cache.layers.empty() ? r.cache.input : r.cache.layers.back().a;
    LayerCache lc;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      lc.z = affine(d->weights, x, d->bias);
      lc.a = activate(d->activation, lc.z);
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      ConvCache cc = conv_forward(*c, x);
      lc.z = std::move(cc.z);
      lc.a = std::move(cc.a);
      lc.columns = std::move(cc.columns);
    } else {
      PoolCache pc = pool_forward(std::get<PoolLayer>(layer), x);
      lc.a = std::move(pc.a);
      lc.argmax = std::move(pc.argmax);
    }
    r.cache.layers.push_back(std::move(lc));
  }
  r.output = r.cache.layers.back().a;
  return r;
}

/// Forward pass without keeping intermediates.
inline Matrix predict(const Network& net, const Matrix& input) {
  if (input.rows() != net.input_size()) {
    throw ShapeError("predict: input " + input.shape() + " but network expects " +
                     std::to_string(net.input_size()) + " features");
  }
  net.count_forward();
  Matrix x = input;
  for (const auto& layer : net.layers()) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      x = activate(d->activation, affine(d->weights, x, d->bias));
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      x = conv_forward(*c, x).a;
    } else {
      x = pool_forward(std::get<PoolLayer>(layer), x).a;
    }
  }
  return x;
}

struct LossResult {
  double loss = 0.0;
  Matrix gradient;  // d(per-sample loss)/d(prediction); backward averages over columns
};

/// Mean squared error over all elements. The gradient column j is
/// (2/rows)(pred_j - target_j), the derivative of sample j's loss, so the
/// column-averaging backward pass yields the derivative of the batch mean.
inline LossResult mse_loss(const Matrix& pred, const Matrix& target) {
  Matrix::require_same_shape(pred, target, "mse_loss");
  LossResult r;
  r.gradient = Matrix(pred.rows(), pred.cols());
  if (pred.empty()) return r;
  const double n = static_cast<double>(pred.size());
  const double scale = 2.0 / static_cast<double>(pred.rows());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += d * d;
    r.gradient[i] = scale * d;
  }
  r.loss = sum / n;
  return r;
}

struct LayerGradient {
  Matrix weights;  // empty for pooling layers
  Matrix bias;
  Matrix delta;    // dZ of this layer (dA for pooling)
};

struct Gradients {
  std::vector<LayerGradient> layers;
};

namespace detail {

inline void check_cache(const Network& net, const ForwardCache& cache, const Matrix& d_out) {
  if (cache.network_id != net.id() || cache.network_version != net.version() ||
      cache.layers.size() != net.layers().size()) {
    throw ContractError("backward: cache was not produced by this network at its current parameters");
  }
  if (!d_out.same_shape(cache.layers.back().a)) {
    throw ShapeError("backward: output gradient " + d_out.shape() + " vs output " +
                     cache.layers.back().a.shape());
  }
}

inline void dense_param_grads(const Matrix& dz, const Matrix& a_prev, LayerGradient& g) {
  const double inv = 1.0 / static_cast<double>(dz.cols());
  g.weights = matmul_nt(dz, a_prev) * inv;
  g.bias = row_sums(dz) * inv;
}

}  // namespace detail

/// Backpropagation. d_out is dLoss/dA of the output layer.
inline Gradients backward_bp(const Network& net, const ForwardCache& cache, const Matrix& d_out) {
  detail::check_cache(net, cache, d_out);
  const auto& layers = net.layers();
  Gradients grads;
  grads.layers.resize(layers.size());
  Matrix d_a = d_out;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& a_prev = cache.activation_before(l);
    const LayerCache& lc = cache.layers[l];
    LayerGradient& g = grads.layers[l];
    if (const auto* d = std::get_if<DenseLayer>(&layers[l])) {
      apply_activation_derivative(d->activation, lc.z, d_a);
      detail::dense_param_grads(d_a, a_prev, g);
      if (l > 0) {
        Matrix next = matmul_tn(d->weights, d_a);
        g.delta = std::move(d_a);
        d_a = std::move(next);
      } else {
        g.delta = std::move(d_a);
      }
    } else if (const auto* c = std::get_if<ConvLayer>(&layers[l])) {
      ConvGradients cg = conv_backward(*c, lc.columns, lc.z, d_a, l > 0);
      g.weights = std::move(cg.weights);
      g.bias = std::move(cg.bias);
      g.delta = std::move(d_a);
      d_a = std::move(cg.input);
    } else {
      Matrix d_in = pool_backward(std::get<PoolLayer>(layers[l]), lc.argmax, d_a);
      g.delta = std::move(d_a);
      d_a = std::move(d_in);
    }
  }
  return grads;
}

/// Direct feedback alignment: every hidden layer receives the output error
/// through its own fixed random matrix, dZ_l = (B_l dZ_out) (.) g'(Z_l).
inline Gradients backward_dfa(const Network& net, const ForwardCache& cache, const Matrix& d_out) {
  detail::check_cache(net, cache, d_out);
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto* d = std::get_if<DenseLayer>(&layers[l]);
    if (d == nullptr) throw ContractError("backward_dfa: only dense networks are supported");
    if (l + 1 < layers.size() && !d->feedback) {
      throw ContractError("backward_dfa: hidden layer " + std::to_string(l) + " has no feedback matrix");
    }
  }
  Gradients grads;
  grads.layers.resize(layers.size());
  const std::size_t out_l = layers.size() - 1;
  const auto& out_layer = std::get<DenseLayer>(layers[out_l]);
  Matrix dz_out = d_out;
  apply_activation_derivative(out_layer.activation, cache.layers[out_l].z, dz_out);
  detail::dense_param_grads(dz_out, cache.activation_before(out_l), grads.layers[out_l]);
  for (std::size_t l = 0; l < out_l; ++l) {
    const auto& d = std::get<DenseLayer>(layers[l]);
    Matrix dz = matmul(*d.feedback, dz_out);
    apply_activation_derivative(d.activation, cache.layers[l].z, dz);
    detail::dense_param_grads(dz, cache.activation_before(l), grads.layers[l]);
    grads.layers[l].delta = std::move(dz);
  }
  grads.layers[out_l].delta = std::move(dz_out);
  return grads;
}

/// Dispatches on the network's configured backend.
inline Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& d_out) {
  return net.backend() == Backend::DFA ? backward_dfa(net, cache, d_out) : backward_bp(net, cache, d_out);
}

inline bool same_architecture(const Network& a, const Network& b) {
  return a.architecture() == b.architecture();
}

/// Copies weights and biases only. Optimizer state and feedback matrices
/// stay with their owners.
inline void clone_params(const Network& source, Network& target) {
  if (!same_architecture(source, target)) {
    throw ArchitectureError("clone_params: source and target architectures differ");
  }
  for (std::size_t l = 0; l < source.layers().size(); ++l) {
    std::visit(
        [&](const auto& src) {
          using T = std::decay_t<decltype(src)>;
          if constexpr (!std::is_same_v<T, PoolLayer>) {
            auto& dst = std::get<T>(target.layers()[l]);
            dst.weights = src.weights;
            dst.bias = src.bias;
          }
        },
        source.layers()[l]);
  }
  target.touch();
}

}  // namespace drl
