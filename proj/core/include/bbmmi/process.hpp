#pragma once

#include <concepts>
#include <cstdint>
#include <utility>

#include "bbmmi/rng.hpp"

namespace bbmmi {

// A model supplies its own opaque state type. States are values: copyable,
// equality-free, owned by exactly one particle. Absorption (membership in the
// boundary set) is queried through the model and is terminal: no model
// operation may map an absorbed state to a non-absorbed one.

enum class EventChannel : std::uint8_t { kMotion, kBranch, kKill, kHardKill };

/// Outcome of one accepted flow-model event: the channel that fired and the
/// particle state at the event time (post-jump for motion).
template <class State>
struct FlowEventOutcome {
  EventChannel channel;
  State state;
};

/// Markov jump process with piecewise-constant rates between system events.
/// Branch/kill/motion clocks are exact competing exponentials. Hard killing
/// happens when a motion jump lands in the absorbing set.
template <class M>
concept JumpModelLike = requires(const M& m, const typename M::State& x,
                                 RngStream& rng) {
  typename M::State;
  { m.motion_rate(x) } -> std::convertible_to<double>;
  { m.sample_motion(x, rng) } -> std::same_as<typename M::State>;
  { m.branch_rate(x) } -> std::convertible_to<double>;
  { m.kill_rate(x) } -> std::convertible_to<double>;
  { m.is_absorbed(x) } -> std::convertible_to<bool>;
  { m.branch_rate_bound() } -> std::convertible_to<double>;
};

/// Jump model with a shared environment component: the environment lives in
/// the system state (not in any particle), switches as a system event, and
/// modulates every particle's rates. Used by the globally-switching
/// branching random walk.
template <class M>
concept SharedEnvJumpModelLike = requires(const M& m, const typename M::State& x,
                                          const typename M::Env& env,
                                          RngStream& rng) {
  typename M::State;
  typename M::Env;
  { m.initial_env() } -> std::same_as<typename M::Env>;
  { m.env_rate(env) } -> std::convertible_to<double>;
  { m.sample_env(env, rng) } -> std::same_as<typename M::Env>;
  { m.motion_rate(x, env) } -> std::convertible_to<double>;
  { m.sample_motion(x, env, rng) } -> std::same_as<typename M::State>;
  { m.branch_rate(x, env) } -> std::convertible_to<double>;
  { m.kill_rate(x, env) } -> std::convertible_to<double>;
  { m.is_absorbed(x) } -> std::convertible_to<bool>;
  { m.branch_rate_bound() } -> std::convertible_to<double>;
};

/// Piecewise deterministic Markov process: states drift along a deterministic
/// flow between events, events are simulated by thinning against a rate bound
/// valid along the flow, and hard killing happens at a boundary hit time that
/// is known analytically.
template <class M>
concept FlowModelLike = requires(const M& m, const typename M::State& x,
                                 double dt, RngStream& rng) {
  typename M::State;
  { m.flow(x, dt) } -> std::same_as<typename M::State>;
  { m.boundary_hit_time(x) } -> std::convertible_to<double>;
  { m.event_rate(x) } -> std::convertible_to<double>;
  { m.rate_bound(x, dt) } -> std::convertible_to<double>;
  { m.sample_event(x, rng) } -> std::same_as<FlowEventOutcome<typename M::State>>;
  { m.is_absorbed(x) } -> std::convertible_to<bool>;
  { m.branch_rate_bound() } -> std::convertible_to<double>;
};

/// Optional flow-model capability: when a particle is within the endgame
/// window of the boundary (time to hit below the engine's threshold), the
/// model resolves the race between the diverging event rate and the boundary
/// analytically, returning the exact next-event delay and outcome. Without
/// it the engine declares a hard kill once the race falls below float
/// resolution.
template <class M>
concept HasBoundaryEndgame =
    requires(const M& m, const typename M::State& x, RngStream& rng) {
      {
        m.boundary_endgame(x, rng)
      } -> std::same_as<std::pair<double, FlowEventOutcome<typename M::State>>>;
    };

template <class M>
concept ModelLike = JumpModelLike<M> || SharedEnvJumpModelLike<M> || FlowModelLike<M>;

}  // namespace bbmmi
