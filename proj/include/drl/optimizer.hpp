#pragma once

#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "drl/error.hpp"
#include "drl/matrix.hpp"
#include "drl/network.hpp"

namespace drl {

/// RMSprop accumulators: one Psi matrix per weight and bias tensor.
struct OptState {
  struct Slot {
    Matrix weights;
    Matrix bias;
  };

  double beta = 0.99;
  double epsilon = 1e-3;
  std::vector<std::optional<Slot>> slots;  // one per layer; empty for pooling

  static OptState for_network(const Network& net, double beta, double epsilon) {
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("RMSprop decay must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("RMSprop epsilon must be positive");
    OptState s;
    s.beta = beta;
    s.epsilon = epsilon;
    for (const auto& layer : net.layers()) {
      std::visit(
          [&](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, PoolLayer>) {
              s.slots.emplace_back();
            } else {
              s.slots.push_back(Slot{Matrix(l.weights.rows(), l.weights.cols()),
                                     Matrix(l.bias.rows(), l.bias.cols())});
            }
          },
          layer);
    }
    return s;
  }
};

namespace detail {

inline void rmsprop_update(Matrix& param, const Matrix& grad, Matrix& psi, double beta,
                           double epsilon, double lr) {
  if (!param.same_shape(grad) || !param.same_shape(psi)) {
    throw ShapeError("rmsprop_step: parameter " + param.shape() + ", gradient " + grad.shape() +
                     ", accumulator " + psi.shape());
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    psi[i] = beta * psi[i] + (1.0 - beta) * g * g;
    param[i] -= lr * g / std::sqrt(psi[i] + epsilon);
  }
}

}  // namespace detail

/// Psi <- beta Psi + (1 - beta) g^2;  p <- p - lr g / sqrt(Psi + eps).
inline void rmsprop_step(Network& net, const Gradients& grads, OptState& opt, double lr) {
  auto& layers = net.layers();
  if (grads.layers.size() != layers.size() || opt.slots.size() != layers.size()) {
    throw ShapeError("rmsprop_step: gradient/optimizer state does not match network depth");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::visit(
        [&](auto& layer) {
          using T = std::decay_t<decltype(layer)>;
          if constexpr (!std::is_same_v<T, PoolLayer>) {
            auto& slot = opt.slots[l];
            if (!slot) throw ShapeError("rmsprop_step: missing optimizer slot");
            detail::rmsprop_update(layer.weights, grads.layers[l].weights, slot->weights, opt.beta,
                                   opt.epsilon, lr);
            detail::rmsprop_update(layer.bias, grads.layers[l].bias, slot->bias, opt.beta,
                                   opt.epsilon, lr);
          }
        },
        layers[l]);
  }
  net.touch();
}

}  // namespace drl
