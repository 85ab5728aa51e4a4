#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "drl/environment.hpp"
#include "drl/error.hpp"
#include "drl/matrix.hpp"
#include "drl/rng.hpp"

namespace drl {

struct Experience {
  Observation s;
  std::size_t a = 0;
  double r = 0.0;
  Observation s_next;
  bool done = false;
  std::optional<std::size_t> a_next;  // on-policy bootstrap action, if any
};

/// Ring of the last N transitions, sampled uniformly with replacement.
class TransitionBuffer {
 public:
  explicit TransitionBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
    entries_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool full() const noexcept { return entries_.size() == capacity_; }
  std::size_t write_index() const noexcept { return write_; }

  void push(Experience e) {
    if (entries_.size() < capacity_) entries_.push_back(std::move(e));
    else entries_[write_] = std::move(e);
    write_ = (write_ + 1) % capacity_;
  }

  /// i-th oldest entry.
  const Experience& oldest(std::size_t i) const {
    if (i >= size()) throw ContractError("replay index out of range");
    return entries_[full() ? (write_ + i) % capacity_ : i];
  }

  std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const {
    if (k == 0) throw ContractError("minibatch size must be positive");
    if (size() < k) throw ContractError("replay buffer holds fewer entries than the minibatch");
    std::vector<std::size_t> idx(k);
    for (auto& i : idx) i = rng.uniform_index(size());
    return idx;
  }

  const Experience& slot(std::size_t i) const { return entries_.at(i); }

  std::vector<Experience> sample_minibatch(std::size_t k, Rng& rng) const {
    std::vector<Experience> out;
    out.reserve(k);
    for (std::size_t i : sample_indices(k, rng)) out.push_back(entries_[i]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t write_ = 0;
  std::vector<Experience> entries_;
};

/// One preprocessed grayscale frame, 0..255 per pixel.
struct GrayFrame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

struct FrameBatch {
  Matrix states;       // (depth*h*w) x k
  Matrix next_states;  // (depth*h*w) x k
  std::vector<std::size_t> actions;
  std::vector<std::size_t> next_actions;
  std::vector<double> rewards;
  std::vector<bool> dones;
  std::vector<std::size_t> indices;
};

/// Stores single frames plus per-step action/reward/done; stacked states are
/// rebuilt from consecutive frames at sampling time.
class FrameRingBuffer {
 public:
  FrameRingBuffer(std::size_t capacity, std::size_t height = 84, std::size_t width = 84, std::size_t depth = 4)
      : capacity_(capacity), height_(height), width_(width), depth_(depth) {
    if (capacity <= depth + 1) throw ConfigError("frame ring capacity too small for the stack depth");
    if (depth == 0 || height == 0 || width == 0) throw ConfigError("frame ring dimensions must be positive");
    frames_.reserve(capacity * frame_size());  // pages are touched only as frames arrive
    actions_.assign(capacity, 0);
    rewards_.assign(capacity, 0.0);
    dones_.assign(capacity, 0);
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t frame_size() const noexcept { return height_ * width_; }
  std::size_t state_size() const noexcept { return depth_ * frame_size(); }
  std::size_t size() const noexcept { return std::min<std::uint64_t>(pushes_, capacity_); }
  std::size_t pointer() const noexcept { return static_cast<std::size_t>(pushes_ % capacity_); }
  std::uint64_t pushes() const noexcept { return pushes_; }
  std::size_t frame_bytes() const noexcept { return capacity_ * frame_size(); }

  void push(const GrayFrame& frame, std::size_t action, double reward, bool done) {
    if (frame.height != height_ || frame.width != width_ || frame.pixels.size() != frame_size())
      throw ShapeError("frame ring expects " + std::to_string(height_) + "x" + std::to_string(width_) + " frames");
    const std::size_t p = pointer();
    if (frames_.size() < (p + 1) * frame_size()) frames_.resize((p + 1) * frame_size());
    std::copy(frame.pixels.begin(), frame.pixels.end(), frames_.begin() + static_cast<std::ptrdiff_t>(p * frame_size()));
    actions_[p] = action;
    rewards_[p] = reward;
    dones_[p] = done;
    ++pushes_;
  }

  std::size_t action(std::size_t t) const { return actions_.at(t); }
  double reward(std::size_t t) const { return rewards_.at(t); }
  bool done(std::size_t t) const { return dones_.at(t) != 0; }
  std::span<const std::uint8_t> frame(std::size_t t) const {
    if (t >= size()) throw ContractError("frame index out of range");
    return {frames_.data() + t * frame_size(), frame_size()};
  }

  /// Frames t-depth+1..t are stored and belong to one episode.
  bool state_available(std::size_t t) const {
    if (t >= size()) return false;
    if (back_distance(t) + depth_ - 1 > size() - 1) return false;
    for (std::size_t j = 1; j < depth_; ++j)
      if (dones_[wrap(t, j)]) return false;
    return true;
  }

  /// Samplable transition: the state is available and t sits at least depth
  /// frames behind the write boundary.
  bool is_valid(std::size_t t) const { return state_available(t) && back_distance(t) >= depth_; }

  /// Scans back from the newest frame; usually stops after a few checks.
  bool has_valid() const {
    for (std::size_t back = 0; back < size(); ++back)
      if (is_valid(wrap(pointer() + capacity_ - 1, back) % capacity_)) return true;
    return false;
  }

  std::vector<std::size_t> valid_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < size(); ++t)
      if (is_valid(t)) out.push_back(t);
    return out;
  }

  /// Frames t-depth+1..t, oldest first, scaled to [0,1].
  void assemble_into(std::size_t t, std::span<double> out) const {
    if (!state_available(t)) throw ValidityError("frame index " + std::to_string(t) + " is not a valid state");
    write_window(t, out);
  }

  std::vector<double> assemble_state(std::size_t t) const {
    std::vector<double> out(state_size());
    assemble_into(t, out);
    return out;
  }

  /// Frames t-depth+2..t+1.
  std::vector<double> assemble_next_state(std::size_t t) const {
    if (!state_available(t) || back_distance(t) == 0)
      throw ValidityError("frame index " + std::to_string(t) + " has no stored successor");
    std::vector<double> out(state_size());
    write_window((t + 1) % capacity_, out);
    return out;
  }

  std::size_t sample_index(Rng& rng) const {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const std::size_t t = rng.uniform_index(std::max<std::size_t>(size(), 1));
      if (is_valid(t)) return t;
    }
    const auto valid = valid_indices();
    if (valid.empty()) throw ContractError("frame ring has no valid state index");
    return valid[rng.uniform_index(valid.size())];
  }

  FrameBatch sample_states(std::size_t k, Rng& rng) const {
    if (k == 0) throw ContractError("minibatch size must be positive");
    FrameBatch b;
    // filled one sample per row, then transposed to one sample per column
    Matrix st(k, state_size()), nx(k, state_size());
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t t = sample_index(rng);
      write_window(t, {st.data() + j * state_size(), state_size()});
      write_window((t + 1) % capacity_, {nx.data() + j * state_size(), state_size()});
      b.actions.push_back(actions_[t]);
      b.next_actions.push_back(actions_[(t + 1) % capacity_]);
      b.rewards.push_back(rewards_[t]);
      b.dones.push_back(dones_[t] != 0);
      b.indices.push_back(t);
    }
    b.states = st.transpose();
    b.next_states = nx.transpose();
    return b;
  }

 private:
  std::size_t back_distance(std::size_t t) const { return (pointer() + capacity_ - 1 - t) % capacity_; }
  std::size_t wrap(std::size_t t, std::size_t back) const { return (t + capacity_ - back) % capacity_; }

  void write_window(std::size_t t, std::span<double> out) const {
    if (out.size() != state_size()) throw ShapeError("state buffer has the wrong size");
    const std::size_t n = frame_size();
    for (std::size_t plane = 0; plane < depth_; ++plane) {
      const std::uint8_t* src = frames_.data() + wrap(t, depth_ - 1 - plane) * n;
      for (std::size_t i = 0; i < n; ++i) out[plane * n + i] = src[i] / 255.0;
    }
  }

  std::size_t capacity_, height_, width_, depth_;
  std::vector<std::uint8_t> frames_;
  std::vector<std::size_t> actions_;
  std::vector<double> rewards_;
  std::vector<std::uint8_t> dones_;
  std::uint64_t pushes_ = 0;
};

/// Acting-side stack of the most recent frames. A new episode fills every
/// plane with its first frame.
class FrameStack {
 public:
  explicit FrameStack(std::size_t depth = 4) : depth_(depth) {
    if (depth == 0) throw ConfigError("frame stack depth must be positive");
  }

  void reset(const GrayFrame& first) {
    frames_.assign(depth_, first);
  }

  void push(const GrayFrame& f) {
    if (frames_.empty()) throw ContractError("frame stack used before reset");
    frames_.erase(frames_.begin());
    frames_.push_back(f);
  }

  std::vector<double> state() const {
    if (frames_.empty()) throw ContractError("frame stack used before reset");
    const std::size_t n = frames_[0].pixels.size();
    std::vector<double> out(depth_ * n);
    for (std::size_t p = 0; p < depth_; ++p)
      for (std::size_t i = 0; i < n; ++i) out[p * n + i] = frames_[p].pixels[i] / 255.0;
    return out;
  }

 private:
  std::size_t depth_;
  std::vector<GrayFrame> frames_;
};

}  // namespace drl
