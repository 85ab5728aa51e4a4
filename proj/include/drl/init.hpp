#pragma once

#include <cmath>
#include <cstddef>

#include "drl/error.hpp"
#include "drl/matrix.hpp"
#include "drl/rng.hpp"

namespace drl {

/// Standard deviation of a standard normal truncated to [-2, 2].
inline constexpr double kTruncatedNormalStd = 0.87962566103423978;

inline double xavier_scale(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
}

/// fan_out x fan_in weights drawn from a +-2 sigma truncated standard normal
/// and scaled by sqrt(2 / (fan_in + fan_out)).
inline Matrix xavier_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  if (fan_in == 0 || fan_out == 0) throw ContractError("xavier_init: fan_in and fan_out must be >= 1");
  const double scale = xavier_scale(fan_in, fan_out);
  Matrix w(fan_out, fan_in);
  for (double& v : w.values()) v = scale * rng.truncated_normal(2.0);
  return w;
}

/// Same draw, explicit fan values but a caller-chosen shape (used by conv
/// filters, whose receptive field enters both fans).
inline Matrix xavier_init(std::size_t rows, std::size_t cols, std::size_t fan_in,
                          std::size_t fan_out, Rng& rng) {
  const double scale = xavier_scale(fan_in, fan_out);
  Matrix w(rows, cols);
  for (double& v : w.values()) v = scale * rng.truncated_normal(2.0);
  return w;
}

}  // namespace drl
