#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bbmmi/rng.hpp"

namespace bbmmi::models {

/// Birth-death benchmark chain on {1..M}: from x the particle jumps at rate
/// x^2, one step left with probability x/(x+1) (reflected at 1) and one step
/// right otherwise (capped at M). The branching variant carries b(x) = x and
/// no soft killing; the killed variant carries b = 0 and kill rate M - x and
/// is the Fleming-Viot counterpart. M = 0 means an unbounded state space,
/// which is only meaningful for the branching variant.
class BenchmarkChain {
 public:
  using State = std::int32_t;
  static constexpr int kUnbounded = 0;

  static BenchmarkChain branching(int m) {
    if (m != kUnbounded && m < 2)
      throw std::invalid_argument("benchmark chain needs M >= 2 or M = unbounded");
    return BenchmarkChain(m, false);
  }

  static BenchmarkChain killed(int m) {
    if (m < 2)
      throw std::invalid_argument(
          "killed benchmark chain is undefined for unbounded M and needs M >= 2");
    return BenchmarkChain(m, true);
  }

  double motion_rate(State x) const { return static_cast<double>(x) * x; }

  State sample_motion(State x, RngStream& rng) const {
    const bool left = rng.uniform01() * (x + 1.0) < static_cast<double>(x);
    if (left) return std::max(1, x - 1);
    return cap_ == kUnbounded ? x + 1 : std::min(cap_, x + 1);
  }

  double branch_rate(State x) const { return killed_ ? 0.0 : static_cast<double>(x); }

  double kill_rate(State x) const {
    return killed_ ? static_cast<double>(cap_ - x) : 0.0;
  }

  bool is_absorbed(State) const { return false; }

  double branch_rate_bound() const {
    if (killed_) return 0.0;
    return cap_ == kUnbounded ? std::numeric_limits<double>::infinity()
                              : static_cast<double>(cap_);
  }

  bool finite() const { return cap_ != kUnbounded; }
  int cap() const { return cap_; }
  bool is_killed_variant() const { return killed_; }

  /// States in fixed (ascending) order, for the semigroup oracle.
  std::vector<State> enumerate_states() const {
    if (!finite()) throw std::logic_error("unbounded chain has no enumeration");
    std::vector<State> out;
    out.reserve(static_cast<std::size_t>(cap_));
    for (State x = 1; x <= cap_; ++x) out.push_back(x);
    return out;
  }

  /// Raw motion jumps (target, rate); self-loops at the reflecting and
  /// capping boundaries are included and cancel in the generator.
  std::vector<std::pair<State, double>> transitions(State x) const {
    const double total = motion_rate(x);
    const double p_left = static_cast<double>(x) / (x + 1.0);
    State left = std::max(1, x - 1);
    State right = cap_ == kUnbounded ? x + 1 : std::min(cap_, x + 1);
    return {{left, total * p_left}, {right, total * (1.0 - p_left)}};
  }

 private:
  BenchmarkChain(int cap, bool killed) : cap_(cap), killed_(killed) {}

  int cap_;
  bool killed_;
};

}  // namespace bbmmi::models
