#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace bbmmi {

template <class State>
struct Particle {
  std::uint64_t id;
  State state;
  double birth_time;
};

/// The configuration presented to interaction policies and to
/// configuration-dependent rate functionals: the full particle list (for a
/// killing event the actor is still listed, at its final position, which may
/// be absorbed) plus which particle the event concerns.
template <class State>
struct PolicyContext {
  std::span<const Particle<State>> particles;
  std::size_t actor_pos;  // index of the actor in `particles`

  std::uint32_t size() const { return static_cast<std::uint32_t>(particles.size()); }
  const Particle<State>& actor() const { return particles[actor_pos]; }
};

/// The pair (p, q): probability that a killing triggers a resampling and
/// that a branching triggers a selection, as functions of the configuration.
/// p must vanish on single-particle configurations; the engine enforces this.
template <class State>
struct InteractionPolicy {
  std::function<double(const PolicyContext<State>&)> resample_prob;  // p
  std::function<double(const PolicyContext<State>&)> select_prob;    // q
  std::string name;
};

inline constexpr std::uint32_t kNoSizeBound =
    std::numeric_limits<std::uint32_t>::max();

/// p = 1{N = nmin}, q = 1{N = nmax}: population size constrained to
/// [nmin, nmax] once inside. nmin = 0 disables resampling entirely and
/// nmax = kNoSizeBound disables selection. nmin = 1 is rejected: a
/// resampling needs a surviving partner.
template <class State>
InteractionPolicy<State> nmin_nmax_policy(std::uint32_t nmin, std::uint32_t nmax) {
  if (nmin == 1) throw std::invalid_argument("nmin_nmax_policy: nmin must not be 1");
  if (nmax < nmin) throw std::invalid_argument("nmin_nmax_policy: nmax < nmin");
  return InteractionPolicy<State>{
      [nmin](const PolicyContext<State>& ctx) {
        return ctx.size() == nmin ? 1.0 : 0.0;
      },
      [nmax](const PolicyContext<State>& ctx) {
        return ctx.size() == nmax ? 1.0 : 0.0;
      },
      "nmin-nmax(" + std::to_string(nmin) + "," +
          (nmax == kNoSizeBound ? std::string("inf") : std::to_string(nmax)) + ")"};
}

/// Constant p, q. p at a single-particle configuration is forced to 0.
template <class State>
InteractionPolicy<State> constant_policy(double p, double q) {
  if (p < 0 || p > 1 || q < 0 || q > 1)
    throw std::invalid_argument("constant_policy: probabilities must be in [0,1]");
  return InteractionPolicy<State>{
      [p](const PolicyContext<State>& ctx) { return ctx.size() <= 1 ? 0.0 : p; },
      [q](const PolicyContext<State>&) { return q; },
      "constant(" + std::to_string(p) + "," + std::to_string(q) + ")"};
}

/// p = 1/(N+1) for N >= 2, q = 1 - 1/(N+1): resampling weakens and selection
/// strengthens as the population grows.
template <class State>
InteractionPolicy<State> size_softened_policy() {
  return InteractionPolicy<State>{
      [](const PolicyContext<State>& ctx) {
        return ctx.size() >= 2 ? 1.0 / (ctx.size() + 1.0) : 0.0;
      },
      [](const PolicyContext<State>& ctx) { return 1.0 - 1.0 / (ctx.size() + 1.0); },
      "size-softened"};
}

}  // namespace bbmmi
