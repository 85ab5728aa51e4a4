#pragma once

#include <cmath>
#include <cstdint>

#include "drl/environment.hpp"
#include "drl/error.hpp"
#include "drl/replay.hpp"

namespace drl {

inline constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

struct Crop {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 0;  // 0 means "to the bottom/right edge"
  std::size_t width = 0;

  friend bool operator==(const Crop&, const Crop&) = default;
};

/// Luminance grayscale, crop, nearest-neighbour resample (source index
/// floor(i * src / dst)). Pixels are stored as bytes; networks see byte/255.
inline GrayFrame preprocess(const RgbFrame& raw, const Crop& crop = {}, std::size_t out_h = 84,
                            std::size_t out_w = 84) {
  const std::size_t ch = crop.height ? crop.height : raw.height - std::min(raw.height, crop.top);
  const std::size_t cw = crop.width ? crop.width : raw.width - std::min(raw.width, crop.left);
  if (crop.top + ch > raw.height || crop.left + cw > raw.width || ch == 0 || cw == 0)
    throw ShapeError("crop outside the frame");
  if (out_h == 0 || out_w == 0) throw ShapeError("output size must be positive");
  GrayFrame out{out_h, out_w, std::vector<std::uint8_t>(out_h * out_w)};
  for (std::size_t i = 0; i < out_h; ++i) {
    const std::size_t y = crop.top + i * ch / out_h;
    for (std::size_t j = 0; j < out_w; ++j) {
      const std::size_t x = crop.left + j * cw / out_w;
      const double lum = kLumaR * raw.at(y, x, 0) + kLumaG * raw.at(y, x, 1) + kLumaB * raw.at(y, x, 2);
      out.pixels[i * out_w + j] = static_cast<std::uint8_t>(std::lround(std::min(255.0, lum)));
    }
  }
  return out;
}

}  // namespace drl
