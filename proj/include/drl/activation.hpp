#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "drl/error.hpp"
#include "drl/matrix.hpp"

namespace drl {

enum class Activation { Sigmoid, Tanh, ReLU, Linear };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::ReLU: return "relu";
    case Activation::Linear: return "linear";
  }
  return "linear";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::ReLU;
  if (s == "linear") return Activation::Linear;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

// Logistic function, evaluated so that exp never overflows.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double activate(Activation kind, double z) {
  switch (kind) {
    case Activation::Sigmoid: return sigmoid(z);
    case Activation::Tanh: return std::tanh(z);
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::Linear: return z;
  }
  return z;
}

/// g'(z). The ReLU derivative at exactly zero is 0.
inline double activate_derivative(Activation kind, double z) {
  switch (kind) {
    case Activation::Sigmoid: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Linear: return 1.0;
  }
  return 1.0;
}

inline Matrix activate(Activation kind, const Matrix& z) {
  if (kind == Activation::Linear) return z;
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = activate(kind, z[i]);
  return out;
}

inline Matrix activate_derivative(Activation kind, const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = activate_derivative(kind, z[i]);
  return out;
}

/// dA (.) g'(Z), computed in place on dA.
inline void apply_activation_derivative(Activation kind, const Matrix& z, Matrix& da) {
  Matrix::require_same_shape(z, da, "activation backward");
  if (kind == Activation::Linear) return;
  for (std::size_t i = 0; i < z.size(); ++i) da[i] *= activate_derivative(kind, z[i]);
}

}  // namespace drl
