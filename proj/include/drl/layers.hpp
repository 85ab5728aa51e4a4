#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drl/activation.hpp"
#include "drl/error.hpp"
#include "drl/matrix.hpp"

namespace drl {

/// channels x height x width. Dense inputs use {n, 1, 1}.
struct Shape3 {
  std::size_t channels = 0;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const noexcept { return channels * height * width; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
  std::string str() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
  }
};

/// floor((dim - kernel + 2 padding) / stride) + 1
inline std::size_t conv_output_dim(std::size_t dim, std::size_t kernel, std::size_t stride,
                                   std::size_t padding) {
  if (stride == 0) throw ShapeError("stride must be >= 1");
  if (dim + 2 * padding < kernel) {
    throw ShapeError("kernel " + std::to_string(kernel) + " does not fit input dim " +
                     std::to_string(dim) + " with padding " + std::to_string(padding));
  }
  return (dim + 2 * padding - kernel) / stride + 1;
}

enum class PoolKind { Max, Average };

inline std::string_view to_string(PoolKind k) { return k == PoolKind::Max ? "max" : "average"; }

inline PoolKind pool_kind_from_string(std::string_view s) {
  if (s == "max") return PoolKind::Max;
  if (s == "average") return PoolKind::Average;
  throw ConfigError("unknown pool kind '" + std::string(s) + "'");
}

struct DenseLayer {
  Matrix weights;  // out x in
  Matrix bias;     // out x 1
  Activation activation = Activation::Linear;
  std::optional<Matrix> feedback;  // out x network_output, DFA hidden layers only

  std::size_t inputs() const noexcept { return weights.cols(); }
  std::size_t outputs() const noexcept { return weights.rows(); }
};

struct ConvLayer {
  Shape3 input;
  std::size_t filters = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  Matrix weights;  // filters x (channels * kernel_h * kernel_w), i.e. F x C x kh x kw
  Matrix bias;     // filters x 1
  Activation activation = Activation::ReLU;

  Shape3 output() const {
    return {filters, conv_output_dim(input.height, kernel_h, stride, padding),
            conv_output_dim(input.width, kernel_w, stride, padding)};
  }
  std::size_t receptive_field() const noexcept { return input.channels * kernel_h * kernel_w; }
};

struct PoolLayer {
  Shape3 input;
  std::size_t window = 2;
  std::size_t stride = 2;
  PoolKind kind = PoolKind::Max;

  Shape3 output() const {
    return {input.channels, conv_output_dim(input.height, window, stride, 0),
            conv_output_dim(input.width, window, stride, 0)};
  }
};

namespace detail {

// Unfolds a batch (features x k, channel-major then row-major features) into
// a (C*kh*kw) x (P*k) patch matrix; sample s owns columns [s*P, (s+1)*P).
inline Matrix im2col(const ConvLayer& layer, const Matrix& x) {
  const Shape3 in = layer.input;
  const Shape3 out = layer.output();
  const std::size_t batch = x.cols();
  const std::size_t positions = out.height * out.width;
  const Matrix xt = x.transpose();  // k x features, contiguous per sample
  Matrix cols(layer.receptive_field(), positions * batch);
  const auto pad = static_cast<long>(layer.padding);
  for (std::size_t s = 0; s < batch; ++s) {
    const double* sample = xt.data() + s * in.size();
    for (std::size_t c = 0; c < in.channels; ++c) {
      for (std::size_t i = 0; i < layer.kernel_h; ++i) {
        for (std::size_t j = 0; j < layer.kernel_w; ++j) {
          const std::size_t r = (c * layer.kernel_h + i) * layer.kernel_w + j;
          double* dst = cols.data() + r * cols.cols() + s * positions;
          for (std::size_t oy = 0; oy < out.height; ++oy) {
            const long y = static_cast<long>(oy * layer.stride + i) - pad;
            for (std::size_t ox = 0; ox < out.width; ++ox) {
              const long xx = static_cast<long>(ox * layer.stride + j) - pad;
              double v = 0.0;
              if (y >= 0 && xx >= 0 && y < static_cast<long>(in.height) &&
                  xx < static_cast<long>(in.width)) {
                v = sample[(c * in.height + static_cast<std::size_t>(y)) * in.width +
                           static_cast<std::size_t>(xx)];
              }
              dst[oy * out.width + ox] = v;
            }
          }
        }
      }
    }
  }
  return cols;
}

// Adjoint of im2col: scatters patch gradients back onto the input grid.
inline Matrix col2im(const ConvLayer& layer, const Matrix& dcols, std::size_t batch) {
  const Shape3 in = layer.input;
  const Shape3 out = layer.output();
  const std::size_t positions = out.height * out.width;
  Matrix dxt(batch, in.size());
  const auto pad = static_cast<long>(layer.padding);
  for (std::size_t s = 0; s < batch; ++s) {
    double* sample = dxt.data() + s * in.size();
    for (std::size_t c = 0; c < in.channels; ++c) {
      for (std::size_t i = 0; i < layer.kernel_h; ++i) {
        for (std::size_t j = 0; j < layer.kernel_w; ++j) {
          const std::size_t r = (c * layer.kernel_h + i) * layer.kernel_w + j;
          const double* src = dcols.data() + r * dcols.cols() + s * positions;
          for (std::size_t oy = 0; oy < out.height; ++oy) {
            const long y = static_cast<long>(oy * layer.stride + i) - pad;
            if (y < 0 || y >= static_cast<long>(in.height)) continue;
            for (std::size_t ox = 0; ox < out.width; ++ox) {
              const long xx = static_cast<long>(ox * layer.stride + j) - pad;
              if (xx < 0 || xx >= static_cast<long>(in.width)) continue;
              sample[(c * in.height + static_cast<std::size_t>(y)) * in.width +
                     static_cast<std::size_t>(xx)] += src[oy * out.width + ox];
            }
          }
        }
      }
    }
  }
  return dxt.transpose();
}

}  // namespace detail

struct ConvCache {
  Matrix columns;  // im2col patches
  Matrix z;        // (F*P) x k pre-activations
  Matrix a;        // activations
};

struct ConvGradients {
  Matrix input;
  Matrix weights;
  Matrix bias;
};

/// Convolution over a batch whose columns are flattened C x H x W images.
inline ConvCache conv_forward(const ConvLayer& layer, const Matrix& x) {
  if (x.rows() != layer.input.size()) {
    throw ShapeError("conv_forward: input has " + std::to_string(x.rows()) +
                     " features, layer expects " + layer.input.str());
  }
  const Shape3 out = layer.output();
  const std::size_t positions = out.height * out.width;
  const std::size_t batch = x.cols();
  ConvCache cache;
  cache.columns = detail::im2col(layer, x);
  const Matrix zm = matmul(layer.weights, cache.columns);  // F x (P*k)
  cache.z = Matrix(out.size(), batch);
  for (std::size_t f = 0; f < layer.filters; ++f) {
    const double b = layer.bias(f, 0);
    for (std::size_t s = 0; s < batch; ++s) {
      const double* src = zm.data() + f * zm.cols() + s * positions;
      for (std::size_t p = 0; p < positions; ++p) cache.z(f * positions + p, s) = src[p] + b;
    }
  }
  if (!cache.z.all_finite()) throw NumericError("conv_forward: non-finite result");
  cache.a = activate(layer.activation, cache.z);
  return cache;
}

/// Gradients are averaged over the batch columns. d_a is dLoss/dA; it is
/// overwritten with dZ. The input gradient is left empty when not wanted.
inline ConvGradients conv_backward(const ConvLayer& layer, const Matrix& columns, const Matrix& z,
                                   Matrix& d_a, bool want_input = true) {
  if (!d_a.same_shape(z)) {
    throw ShapeError("conv_backward: gradient " + d_a.shape() + " vs output " + z.shape());
  }
  apply_activation_derivative(layer.activation, z, d_a);
  const Shape3 out = layer.output();
  const std::size_t positions = out.height * out.width;
  const std::size_t batch = d_a.cols();
  Matrix dzm(layer.filters, positions * batch);
  for (std::size_t f = 0; f < layer.filters; ++f)
    for (std::size_t s = 0; s < batch; ++s) {
      double* dst = dzm.data() + f * dzm.cols() + s * positions;
      for (std::size_t p = 0; p < positions; ++p) dst[p] = d_a(f * positions + p, s);
    }
  const double inv = 1.0 / static_cast<double>(batch);
  ConvGradients g;
  g.weights = matmul_nt(dzm, columns) * inv;
  g.bias = row_sums(dzm) * inv;
  if (want_input) g.input = detail::col2im(layer, matmul_tn(layer.weights, dzm), batch);
  return g;
}

inline ConvGradients conv_backward(const ConvLayer& layer, const ConvCache& cache, Matrix d_a) {
  return conv_backward(layer, cache.columns, cache.z, d_a);
}

struct PoolCache {
  Matrix a;
  std::vector<std::size_t> argmax;  // input feature index per (output, sample), Max only
};

inline PoolCache pool_forward(const PoolLayer& layer, const Matrix& x) {
  if (x.rows() != layer.input.size()) {
    throw ShapeError("pool_forward: input has " + std::to_string(x.rows()) +
                     " features, layer expects " + layer.input.str());
  }
  if (layer.window == 0 || layer.stride == 0) throw ShapeError("pool window and stride must be >= 1");
  const Shape3 in = layer.input;
  const Shape3 out = layer.output();
  const std::size_t batch = x.cols();
  PoolCache cache;
  cache.a = Matrix(out.size(), batch);
  if (layer.kind == PoolKind::Max) cache.argmax.assign(out.size() * batch, 0);
  const double inv_area = 1.0 / static_cast<double>(layer.window * layer.window);
  for (std::size_t c = 0; c < in.channels; ++c)
    for (std::size_t oy = 0; oy < out.height; ++oy)
      for (std::size_t ox = 0; ox < out.width; ++ox) {
        const std::size_t o = (c * out.height + oy) * out.width + ox;
        for (std::size_t s = 0; s < batch; ++s) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          double sum = 0.0;
          for (std::size_t i = 0; i < layer.window; ++i)
            for (std::size_t j = 0; j < layer.window; ++j) {
              const std::size_t idx =
                  (c * in.height + oy * layer.stride + i) * in.width + ox * layer.stride + j;
              const double v = x(idx, s);
              sum += v;
              if (v > best) {
                best = v;
                best_idx = idx;
              }
            }
          if (layer.kind == PoolKind::Max) {
            cache.a(o, s) = best;
            cache.argmax[o * batch + s] = best_idx;
          } else {
            cache.a(o, s) = sum * inv_area;
          }
        }
      }
  return cache;
}

/// Max routes each output gradient to its argmax; Average spreads it evenly.
inline Matrix pool_backward(const PoolLayer& layer, std::span<const std::size_t> argmax,
                            const Matrix& d_a) {
  if (d_a.rows() != layer.output().size() ||
      (layer.kind == PoolKind::Max && argmax.size() != d_a.size())) {
    throw ShapeError("pool_backward: gradient " + d_a.shape() + " does not match output " +
                     layer.output().str());
  }
  const Shape3 in = layer.input;
  const Shape3 out = layer.output();
  const std::size_t batch = d_a.cols();
  Matrix dx(in.size(), batch);
  const double inv_area = 1.0 / static_cast<double>(layer.window * layer.window);
  for (std::size_t c = 0; c < in.channels; ++c)
    for (std::size_t oy = 0; oy < out.height; ++oy)
      for (std::size_t ox = 0; ox < out.width; ++ox) {
        const std::size_t o = (c * out.height + oy) * out.width + ox;
        for (std::size_t s = 0; s < batch; ++s) {
          const double g = d_a(o, s);
          if (layer.kind == PoolKind::Max) {
            dx(argmax[o * batch + s], s) += g;
          } else {
            for (std::size_t i = 0; i < layer.window; ++i)
              for (std::size_t j = 0; j < layer.window; ++j)
                dx((c * in.height + oy * layer.stride + i) * in.width + ox * layer.stride + j, s) +=
                    g * inv_area;
          }
        }
      }
  return dx;
}

inline Matrix pool_backward(const PoolLayer& layer, const PoolCache& cache, const Matrix& d_a) {
  if (!d_a.same_shape(cache.a)) {
    throw ShapeError("pool_backward: gradient " + d_a.shape() + " vs output " + cache.a.shape());
  }
  return pool_backward(layer, cache.argmax, d_a);
}

}  // namespace drl
