#pragma once

// Independent reference computations used only by the test suites.

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <functional>
#include <vector>

#include "drl/matrix.hpp"
#include "drl/network.hpp"

namespace drl::oracle {

/// Mean squared error recomputed from scratch (no library loss routine).
inline double mean_squared_error(const Matrix& pred, const Matrix& target) {
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

/// Central difference of loss(net) w.r.t. one parameter entry.
inline double central_difference(Network& net, Matrix& param, std::size_t index,
                                 const std::function<double(const Network&)>& loss, double h) {
  const double saved = param[index];
  param[index] = saved + h;
  net.touch();
  const double up = loss(net);
  param[index] = saved - h;
  net.touch();
  const double down = loss(net);
  param[index] = saved;
  net.touch();
  return (up - down) / (2.0 * h);
}

/// True when analytic matches numeric within rel_tol relative error or the
/// abs_floor absolute floor.
inline bool gradient_close(double analytic, double numeric, double rel_tol, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return true;
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return diff <= rel_tol * scale;
}

/// Counts kernel placements along one axis by walking every start offset of
/// the padded input.
inline std::size_t count_placements(std::size_t dim, std::size_t kernel, std::size_t stride,
                                    std::size_t padding) {
  std::size_t count = 0;
  const long padded = static_cast<long>(dim + 2 * padding);
  for (long start = 0; start + static_cast<long>(kernel) <= padded; start += static_cast<long>(stride))
    ++count;
  return count;
}

// Independent validity check from the global push history: index t holds
// the most recent push whose time is congruent to t, the window needs four
// stored frames of one episode, and at least four newer frames must exist.
struct FrameHistory {
  std::size_t capacity;
  std::vector<int> episode_of;  // per global push time

  bool valid(std::size_t t) const {
    const long total = long(episode_of.size());
    if (long(t) >= std::min<long>(total, long(capacity))) return false;
    long tau = long(t) + ((total - 1 - long(t)) / long(capacity)) * long(capacity);
    if (tau > total - 1) tau -= long(capacity);
    if (tau < 0) return false;
    if (total - 1 - tau < 4) return false;
    if (tau - 3 < 0 || tau - 3 < total - long(capacity)) return false;
    for (long u = tau - 3; u < tau; ++u)
      if (episode_of[u] != episode_of[tau]) return false;
    return true;
  }
};

}  // namespace drl::oracle
