#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "bbmmi/rng.hpp"

namespace bbmmi::models {

/// Parameters of the regime-switching branching random walk on {0..n}:
/// unit-rate nearest-neighbour steps (right with probability p_right,
/// truncated at the ends), an off regime with zero branching, and an on
/// regime whose branch rate is drawn Exp(rate_draw) at each on-switch.
/// No a-priori bound on the branch rate exists, which is the point of the
/// example: the fixed-size Moran construction is unavailable.
struct BrwSpec {
  std::int32_t n = 10;
  double p_right = 0.5;
  double s_on = 1.0;   // rate of switching off -> on
  double s_off = 1.0;  // rate of switching on -> off
  double rate_draw = 1.0;

  void validate() const {
    if (n < 1) throw std::invalid_argument("brw: n >= 1 required");
    if (!(p_right > 0 && p_right < 1))
      throw std::invalid_argument("brw: p_right must lie in (0,1)");
    if (!(s_on > 0) || !(s_off > 0) || !(rate_draw > 0))
      throw std::invalid_argument("brw: rates must be positive");
  }
};

/// Variant with the switching environment embedded in each particle's own
/// state. Newborns inherit the parent's regime, so regimes decouple across
/// particles after branching; kept for testing against the shared variant.
class BrwPerParticleModel {
 public:
  struct State {
    std::int32_t site;
    bool on;
    double rate;  // branch rate drawn at the last on-switch; 0 while off
  };

  explicit BrwPerParticleModel(BrwSpec spec) : spec_(spec) { spec_.validate(); }

  double motion_rate(const State& s) const {
    return 1.0 + (s.on ? spec_.s_off : spec_.s_on);
  }

  State sample_motion(const State& s, RngStream& rng) const {
    const double switch_rate = s.on ? spec_.s_off : spec_.s_on;
    if (rng.uniform01() * (1.0 + switch_rate) < switch_rate) {
      if (s.on) return State{s.site, false, 0.0};
      return State{s.site, true, rng.exponential(spec_.rate_draw)};
    }
    return State{step(s.site, rng), s.on, s.rate};
  }

  double branch_rate(const State& s) const { return s.on ? s.rate : 0.0; }
  double kill_rate(const State&) const { return 0.0; }
  bool is_absorbed(const State&) const { return false; }
  double branch_rate_bound() const { return std::numeric_limits<double>::infinity(); }

  const BrwSpec& spec() const { return spec_; }

 private:
  friend class BrwSharedEnvModel;

  std::int32_t step(std::int32_t site, RngStream& rng) const {
    const std::int32_t next = rng.uniform01() < spec_.p_right ? site + 1 : site - 1;
    return std::clamp(next, std::int32_t{0}, spec_.n);
  }

  BrwSpec spec_;
};

/// Default variant: one global switching clock shared by the whole system,
/// stored in the system state and toggled as a system event, exactly one
/// environment for all particles.
class BrwSharedEnvModel {
 public:
  using State = std::int32_t;  // site

  struct Env {
    bool on;
    double rate;
  };

  explicit BrwSharedEnvModel(BrwSpec spec) : walk_(spec) {}

  Env initial_env() const { return Env{false, 0.0}; }

  double env_rate(const Env& env) const {
    return env.on ? walk_.spec().s_off : walk_.spec().s_on;
  }

  Env sample_env(const Env& env, RngStream& rng) const {
    if (env.on) return Env{false, 0.0};
    return Env{true, rng.exponential(walk_.spec().rate_draw)};
  }

  double motion_rate(const State&, const Env&) const { return 1.0; }

  State sample_motion(const State& site, const Env&, RngStream& rng) const {
    return walk_.step(site, rng);
  }

  double branch_rate(const State&, const Env& env) const {
    return env.on ? env.rate : 0.0;
  }

  double kill_rate(const State&, const Env&) const { return 0.0; }
  bool is_absorbed(const State&) const { return false; }
  double branch_rate_bound() const { return std::numeric_limits<double>::infinity(); }

  const BrwSpec& spec() const { return walk_.spec(); }

 private:
  BrwPerParticleModel walk_;
};

}  // namespace bbmmi::models
