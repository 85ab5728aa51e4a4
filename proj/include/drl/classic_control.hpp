#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "drl/environment.hpp"

namespace drl {

/// Pole on a cart, explicit Euler with tau = 0.02 s. Actions: 0 push left,
/// 1 push right. +1 per step including the terminal one. Ends when the pole
/// leaves +-12 degrees, the cart leaves +-2.4, or after 500 steps. Start
/// state uniform in +-0.05 per component.
class CartPole final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kTotalMass = kCartMass + kPoleMass;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kPoleMassLength = kPoleMass * kHalfLength;
  static constexpr double kForce = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kAngleLimit = 12.0 * 2.0 * std::numbers::pi / 360.0;
  static constexpr double kPositionLimit = 2.4;
  static constexpr double kInitRange = 0.05;

  explicit CartPole(std::uint64_t seed, std::size_t max_steps = 500) : Environment(seed) {
    spec_.name = "cartpole";
    spec_.observation_dim = 4;
    spec_.action_count = 2;
    spec_.max_steps = max_steps;
    spec_.rewards["step"] = 1.0;
  }

  const EnvSpec& spec() const override { return spec_; }
  const std::array<double, 4>& state() const noexcept { return state_; }
  void set_state(const std::array<double, 4>& s) { state_ = s; }

 protected:
  Observation do_reset(Rng& rng) override {
    for (double& v : state_) v = rng.uniform(-kInitRange, kInitRange);
    return {state_.begin(), state_.end()};
  }

  Observation do_step(std::size_t action, double& reward, bool& terminal) override {
    auto& [x, x_dot, theta, theta_dot] = state_;
    const double force = action == 1 ? kForce : -kForce;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
    const double theta_acc = (kGravity * sin_t - cos_t * temp) /
                             (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;
    x += kTau * x_dot;
    x_dot += kTau * x_acc;
    theta += kTau * theta_dot;
    theta_dot += kTau * theta_acc;
    terminal = x < -kPositionLimit || x > kPositionLimit || theta < -kAngleLimit || theta > kAngleLimit;
    reward = 1.0;
    return {state_.begin(), state_.end()};
  }

 private:
  EnvSpec spec_;
  std::array<double, 4> state_{};
};

/// Underpowered car in a valley. Actions: 0 push left, 1 push right, 2 null.
/// -1 per step; ends at position >= 0.5 or after 500 steps. Start position
/// uniform in [-0.6, -0.4], velocity 0.
class MountainCar final : public Environment {
 public:
  static constexpr double kMinPosition = -1.2;
  static constexpr double kMaxPosition = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kGoalPosition = 0.5;
  static constexpr double kForce = 0.001;
  static constexpr double kGravity = 0.0025;

  explicit MountainCar(std::uint64_t seed, std::size_t max_steps = 500) : Environment(seed) {
    spec_.name = "mountaincar";
    spec_.observation_dim = 2;
    spec_.action_count = 3;
    spec_.max_steps = max_steps;
    spec_.rewards["step"] = -1.0;
  }

  const EnvSpec& spec() const override { return spec_; }
  double position() const noexcept { return position_; }
  double velocity() const noexcept { return velocity_; }

  /// Kinetic plus potential energy of the continuous-time dynamics.
  static double energy(double position, double velocity) {
    return 0.5 * velocity * velocity + kGravity / 3.0 * std::sin(3.0 * position);
  }

 protected:
  Observation do_reset(Rng& rng) override {
    position_ = rng.uniform(-0.6, -0.4);
    velocity_ = 0.0;
    return {position_, velocity_};
  }

  Observation do_step(std::size_t action, double& reward, bool& terminal) override {
    const double push = action == 0 ? -1.0 : (action == 1 ? 1.0 : 0.0);
    velocity_ += push * kForce - kGravity * std::cos(3.0 * position_);
    velocity_ = std::clamp(velocity_, -kMaxSpeed, kMaxSpeed);
    position_ += velocity_;
    position_ = std::clamp(position_, kMinPosition, kMaxPosition);
    if (position_ == kMinPosition && velocity_ < 0.0) velocity_ = 0.0;
    terminal = position_ >= kGoalPosition;
    reward = -1.0;
    return {position_, velocity_};
  }

 private:
  EnvSpec spec_;
  double position_ = 0.0;
  double velocity_ = 0.0;
};

/// Two-link underactuated pendulum, one RK4 step of 0.2 s per action.
/// Actions: 0 torque +1, 1 torque -1, 2 null. Observation
/// (cos t1, sin t1, cos t2, sin t2, dt1, dt2). -1 per step; ends when the tip
/// rises one link length above the pivot or after 500 steps. Start state
/// uniform in +-0.1 per component.
class Acrobot final : public Environment {
 public:
  static constexpr double kDt = 0.2;
  static constexpr double kLink1 = 1.0;
  static constexpr double kMass1 = 1.0;
  static constexpr double kMass2 = 1.0;
  static constexpr double kCom1 = 0.5;
  static constexpr double kCom2 = 0.5;
  static constexpr double kMoi = 1.0;
  static constexpr double kGravity = 9.8;
  static constexpr double kMaxVel1 = 4.0 * std::numbers::pi;
  static constexpr double kMaxVel2 = 9.0 * std::numbers::pi;

  using State = std::array<double, 4>;

  explicit Acrobot(std::uint64_t seed, std::size_t max_steps = 500) : Environment(seed) {
    spec_.name = "acrobot";
    spec_.observation_dim = 6;
    spec_.action_count = 3;
    spec_.max_steps = max_steps;
    spec_.rewards["step"] = -1.0;
  }

  const EnvSpec& spec() const override { return spec_; }
  const State& state() const noexcept { return state_; }

  static double tip_height(const State& s) { return -std::cos(s[0]) - std::cos(s[0] + s[1]); }

 protected:
  Observation do_reset(Rng& rng) override {
    for (double& v : state_) v = rng.uniform(-0.1, 0.1);
    return observe();
  }

  Observation do_step(std::size_t action, double& reward, bool& terminal) override {
    const double torque = action == 0 ? 1.0 : (action == 1 ? -1.0 : 0.0);
    const State k1 = derivatives(state_, torque);
    const State k2 = derivatives(add(state_, k1, kDt / 2), torque);
    const State k3 = derivatives(add(state_, k2, kDt / 2), torque);
    const State k4 = derivatives(add(state_, k3, kDt), torque);
    for (std::size_t i = 0; i < 4; ++i) state_[i] += kDt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    state_[0] = wrap(state_[0]);
    state_[1] = wrap(state_[1]);
    state_[2] = std::clamp(state_[2], -kMaxVel1, kMaxVel1);
    state_[3] = std::clamp(state_[3], -kMaxVel2, kMaxVel2);
    terminal = tip_height(state_) > 1.0;
    reward = -1.0;
    return observe();
  }

 private:
  static State add(const State& s, const State& d, double h) {
    return {s[0] + h * d[0], s[1] + h * d[1], s[2] + h * d[2], s[3] + h * d[3]};
  }

  static double wrap(double angle) {
    const double two_pi = 2.0 * std::numbers::pi;
    while (angle > std::numbers::pi) angle -= two_pi;
    while (angle < -std::numbers::pi) angle += two_pi;
    return angle;
  }

  static State derivatives(const State& s, double torque) {
    const double half_pi = std::numbers::pi / 2.0;
    const auto [t1, t2, dt1, dt2] = s;
    const double d1 = kMass1 * kCom1 * kCom1 +
                      kMass2 * (kLink1 * kLink1 + kCom2 * kCom2 + 2 * kLink1 * kCom2 * std::cos(t2)) +
                      2 * kMoi;
    const double d2 = kMass2 * (kCom2 * kCom2 + kLink1 * kCom2 * std::cos(t2)) + kMoi;
    const double phi2 = kMass2 * kCom2 * kGravity * std::cos(t1 + t2 - half_pi);
    const double phi1 = -kMass2 * kLink1 * kCom2 * dt2 * dt2 * std::sin(t2) -
                        2 * kMass2 * kLink1 * kCom2 * dt2 * dt1 * std::sin(t2) +
                        (kMass1 * kCom1 + kMass2 * kLink1) * kGravity * std::cos(t1 - half_pi) + phi2;
    const double ddt2 = (torque + d2 / d1 * phi1 - kMass2 * kLink1 * kCom2 * dt1 * dt1 * std::sin(t2) - phi2) /
                        (kMass2 * kCom2 * kCom2 + kMoi - d2 * d2 / d1);
    const double ddt1 = -(d2 * ddt2 + phi1) / d1;
    return {dt1, dt2, ddt1, ddt2};
  }

  Observation observe() const {
    return {std::cos(state_[0]), std::sin(state_[0]), std::cos(state_[1]),
            std::sin(state_[1]), state_[2], state_[3]};
  }

  EnvSpec spec_;
  State state_{};
};

}  // namespace drl
