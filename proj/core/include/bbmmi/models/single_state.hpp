#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bbmmi/rng.hpp"

namespace bbmmi::models {

/// Degenerate one-point process with constant branch and kill rates and an
/// optional self-loop motion rate. Its Feynman-Kac semigroup is the scalar
/// exponential e^{(b-k)t}, which makes it the simplest end-to-end check for
/// every estimator.
class SingleStateModel {
 public:
  using State = std::int32_t;

  SingleStateModel(double branch, double kill, double motion = 0.0)
      : branch_(branch), kill_(kill), motion_(motion) {}

  double motion_rate(State) const { return motion_; }
  State sample_motion(State x, RngStream&) const { return x; }
  double branch_rate(State) const { return branch_; }
  double kill_rate(State) const { return kill_; }
  bool is_absorbed(State) const { return false; }
  double branch_rate_bound() const { return branch_; }

  bool finite() const { return true; }
  std::vector<State> enumerate_states() const { return {0}; }
  std::vector<std::pair<State, double>> transitions(State x) const {
    if (motion_ > 0) return {{x, motion_}};
    return {};
  }

 private:
  double branch_;
  double kill_;
  double motion_;
};

}  // namespace bbmmi::models
