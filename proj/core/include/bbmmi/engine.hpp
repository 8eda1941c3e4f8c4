#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bbmmi/clock.hpp"
#include "bbmmi/errors.hpp"
#include "bbmmi/policy.hpp"
#include "bbmmi/process.hpp"
#include "bbmmi/rng.hpp"
#include "bbmmi/series.hpp"

namespace bbmmi {

enum class EventKind : std::uint8_t {
  kMotion,
  kBranch,
  kSoftKill,
  kHardKill,
  kResample,
  kSelect,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::kMotion: return "motion";
    case EventKind::kBranch: return "branch";
    case EventKind::kSoftKill: return "softkill";
    case EventKind::kHardKill: return "hardkill";
    case EventKind::kResample: return "resample";
    case EventKind::kSelect: return "select";
  }
  return "?";
}

/// One system event. A kill immediately followed by a resampling is one
/// `resample` record; a branching immediately followed by a selection is one
/// `select` record; both leave the size unchanged. Actor id 0 is reserved
/// for shared-environment switches (recorded as motion).
struct EventRecord {
  double time;
  EventKind kind;
  std::uint64_t actor;
  std::uint64_t partner;  // duplicated (resample) or removed (select) particle
  std::uint32_t size_before;
  std::uint32_t size_after;
};

/// Optional configuration-dependent per-particle branch/kill rates b^i, k^i.
/// Only jump models accept these; the engine checks the balance condition
/// b^i - k^i = b(x_i) - k(x_i) at every evaluation.
template <class State>
struct ConfigRates {
  std::function<double(const PolicyContext<State>&)> branch_rate;
  std::function<double(const PolicyContext<State>&)> kill_rate;

  bool enabled() const { return static_cast<bool>(branch_rate); }
};

namespace detail {

template <class M>
struct ModelEnv {
  using type = std::monostate;
};

template <SharedEnvJumpModelLike M>
struct ModelEnv<M> {
  using type = typename M::Env;
};

}  // namespace detail

template <class State, class Env = std::monostate>
struct SystemState {
  std::vector<Particle<State>> particles;
  Env env{};
  double time = 0;
  std::uint64_t count_resample = 0;  // A_t
  std::uint64_t count_select = 0;    // B_t
  std::uint64_t count_events = 0;    // C_t
  std::uint64_t count_branch = 0;    // beta_t
  std::uint64_t count_kill = 0;      // soft + hard kills, resampled or not
  double log_weight_a = 0;           // log Pi^A, always <= 0
  double log_weight_b = 0;           // log Pi^B, always >= 0
  std::uint64_t next_id = 1;
  std::uint32_t max_size_seen = 0;   // R_t
  bool hard_kill_tie = false;

  std::uint32_t size() const { return static_cast<std::uint32_t>(particles.size()); }
  bool empty() const { return particles.empty(); }
};

struct EngineOptions {
  std::uint64_t event_cap = 100'000'000;
  bool record_events = false;
};

/// The interacting particle system. Particles evolve as independent copies
/// of the underlying process between events; the next event is the minimum
/// of all branch / soft-kill / hard-kill / motion clocks (exact competing
/// exponentials for jump models, thinning for flow models). A kill triggers
/// a resampling with probability p(config), multiplying Pi^A by (N-1)/N;
/// a branching triggers a selection with probability q(config), multiplying
/// Pi^B by (N+1)/N.
template <ModelLike Model>
class System {
 public:
  using State = typename Model::State;
  using Env = typename detail::ModelEnv<Model>::type;
  using StateType = SystemState<State, Env>;

  System(const Model& model, InteractionPolicy<State> policy,
         std::vector<State> initial, RngStream rng, EngineOptions opts = {},
         ConfigRates<State> custom = {})
      : model_(&model),
        policy_(std::move(policy)),
        rng_(rng),
        opts_(opts),
        custom_(std::move(custom)) {
    if (custom_.enabled() && !plain_jump)
      throw std::invalid_argument(
          "configuration-dependent rates are supported for jump models only");
    state_.particles.reserve(initial.size() + 1);
    for (auto& x : initial) {
      if (model_->is_absorbed(x))
        throw std::invalid_argument("initial state lies in the absorbing set");
      state_.particles.push_back(Particle<State>{state_.next_id++, std::move(x), 0.0});
    }
    if constexpr (has_env) state_.env = model_->initial_env();
    state_.max_size_seen = state_.size();
  }

  /// Process every event strictly before `target`, then move the clock to
  /// `target` (deterministic drift included for flow models). No-op once the
  /// system is empty except for the clock.
  void advance_to(double target) {
    while (state_.time < target) {
      if (state_.empty()) {
        state_.time = target;
        return;
      }
      auto ev = propose(target - state_.time);
      if (!ev) {
        drift_all(target - state_.time);
        state_.time = target;
        return;
      }
      drift_all(ev->dt);
      state_.time += ev->dt;
      apply(*ev);
      if (++state_.count_events > opts_.event_cap)
        throw ExplosionGuard(opts_.event_cap, state_.time);
    }
  }

  const StateType& state() const { return state_; }
  double time() const { return state_.time; }
  bool empty() const { return state_.empty(); }

  /// Occupation measure m_t applied to f: sum of f over living particles.
  /// Observables are extended by 0 on the absorbing set.
  double occupation(const std::function<double(const State&)>& f) const {
    double acc = 0;
    for (const auto& p : state_.particles)
      if (!model_->is_absorbed(p.state)) acc += f(p.state);
    return acc;
  }

  /// m_t f / N_0 (the normalised occupation measure against the initial count).
  double occupation_normalized(const std::function<double(const State&)>& f,
                               std::uint32_t initial_size) const {
    return occupation(f) / static_cast<double>(initial_size);
  }

  Snapshot snapshot(const std::function<double(const State&)>& f) const {
    Snapshot s;
    s.time = state_.time;
    s.size = state_.size();
    s.resamples = state_.count_resample;
    s.selections = state_.count_select;
    s.events = state_.count_events;
    s.branches = state_.count_branch;
    s.log_pi_a = state_.log_weight_a;
    s.log_pi_b = state_.log_weight_b;
    s.occ_f = occupation(f);
    s.occ_1 = static_cast<double>(state_.size());
    return s;
  }

  std::vector<EventRecord> take_events() { return std::move(events_); }
  const std::vector<EventRecord>& events() const { return events_; }

  void set_rng(RngStream rng) { rng_ = rng; }
  const RngStream& rng() const { return rng_; }

 private:
  static constexpr bool has_env = SharedEnvJumpModelLike<Model>;
  static constexpr bool plain_jump = JumpModelLike<Model>;
  static constexpr bool is_flow = FlowModelLike<Model>;
  static constexpr int kMaxThinningProposals = 1'000'000;
  static constexpr double kBoundaryEps = 1e-12;
  static constexpr double kEndgameTime = 1e-9;

  struct Pending {
    double dt;
    EventChannel channel;
    std::size_t pos;         // particle index; unused for env switches
    std::optional<State> post_state;
    bool env_switch = false;
  };

  PolicyContext<State> context(std::size_t actor_pos) const {
    return PolicyContext<State>{state_.particles, actor_pos};
  }

  double particle_branch_rate(std::size_t pos) const {
    if (custom_.enabled()) return checked_custom(pos).first;
    if constexpr (has_env)
      return model_->branch_rate(state_.particles[pos].state, state_.env);
    else
      return model_->branch_rate(state_.particles[pos].state);
  }

  double particle_kill_rate(std::size_t pos) const {
    if (custom_.enabled()) return checked_custom(pos).second;
    if constexpr (has_env)
      return model_->kill_rate(state_.particles[pos].state, state_.env);
    else
      return model_->kill_rate(state_.particles[pos].state);
  }

  std::pair<double, double> checked_custom(std::size_t pos) const {
    const auto ctx = context(pos);
    const double bi = custom_.branch_rate(ctx);
    const double ki = custom_.kill_rate(ctx);
    double b0, k0;
    if constexpr (plain_jump) {
      b0 = model_->branch_rate(state_.particles[pos].state);
      k0 = model_->kill_rate(state_.particles[pos].state);
    } else {
      b0 = k0 = 0;
    }
    if (std::abs((bi - ki) - (b0 - k0)) > 1e-9)
      throw std::logic_error("balance condition violated: b^i - k^i != b - k");
    return {bi, ki};
  }

  std::optional<Pending> propose(double horizon) {
    if constexpr (is_flow)
      return propose_flow(horizon);
    else
      return propose_jump(horizon);
  }

  // Jump models: all rates are constant until the next event, so the next
  // event time is Exp(total rate) and the channel is chosen in proportion.
  std::optional<Pending> propose_jump(double horizon) {
    const std::size_t n = state_.particles.size();
    rates_.clear();
    rates_.reserve(3 * n + 1);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const State& x = state_.particles[i].state;
      double mr;
      if constexpr (has_env)
        mr = model_->motion_rate(x, state_.env);
      else
        mr = model_->motion_rate(x);
      const double br = particle_branch_rate(i);
      const double kr = particle_kill_rate(i);
      rates_.push_back(mr);
      rates_.push_back(br);
      rates_.push_back(kr);
      total += mr + br + kr;
    }
    double env_rate = 0;
    if constexpr (has_env) {
      env_rate = model_->env_rate(state_.env);
      total += env_rate;
    }
    if (total <= 0) return std::nullopt;
    const double dt = rng_.exponential(total);
    if (dt >= horizon) return std::nullopt;

    // Walk the cumulative rates; roundoff at the very end falls back to the
    // last channel with positive rate (the environment one when present).
    std::size_t pick_i = 0;
    int pick_c = -1;
    double u = rng_.uniform01() * total;
    bool env_pick = false;
    if constexpr (has_env) env_pick = env_rate > 0;
    for (std::size_t i = 0; i < n && pick_c < 0; ++i) {
      for (int c = 0; c < 3; ++c) {
        u -= rates_[3 * i + c];
        if (u < 0 && rates_[3 * i + c] > 0) {
          pick_i = i;
          pick_c = c;
          env_pick = false;
          break;
        }
      }
    }
    if (pick_c < 0 && !env_pick) {
      for (std::size_t i = n; i-- > 0 && pick_c < 0;)
        for (int c = 3; c-- > 0;)
          if (rates_[3 * i + c] > 0) {
            pick_i = i;
            pick_c = c;
            break;
          }
    }
    if (pick_c < 0) {
      if constexpr (has_env) return Pending{dt, EventChannel::kMotion, 0, {}, true};
      return std::nullopt;  // unreachable: total > 0 implies some positive rate
    }
    if (pick_c == 1) return Pending{dt, EventChannel::kBranch, pick_i, {}, false};
    if (pick_c == 2) return Pending{dt, EventChannel::kKill, pick_i, {}, false};
    State next = [&] {
      if constexpr (has_env)
        return model_->sample_motion(state_.particles[pick_i].state, state_.env, rng_);
      else
        return model_->sample_motion(state_.particles[pick_i].state, rng_);
    }();
    const auto channel = model_->is_absorbed(next) ? EventChannel::kHardKill
                                                   : EventChannel::kMotion;
    return Pending{dt, channel, pick_i, std::move(next), false};
  }

  // Flow models: each particle's next event is sampled exactly by thinning
  // against the model's rate bound; the system event is the earliest one.
  std::optional<Pending> propose_flow(double horizon) {
    std::optional<Pending> best;
    for (std::size_t i = 0; i < state_.particles.size(); ++i) {
      auto cand = thin_particle(i, horizon);
      if (cand && (!best || cand->dt < best->dt)) best = std::move(cand);
    }
    return best;
  }

  std::optional<Pending> thin_particle(std::size_t pos, double horizon) {
    if constexpr (is_flow) {
      State x = state_.particles[pos].state;
      double elapsed = 0;
      double lookahead_cap = horizon;
      for (int it = 0; it < kMaxThinningProposals; ++it) {
        const double to_boundary = model_->boundary_hit_time(x);
        if constexpr (HasBoundaryEndgame<Model>) {
          if (to_boundary <= kEndgameTime) {
            auto [dt, outcome] = model_->boundary_endgame(x, rng_);
            if (elapsed + dt >= horizon) return std::nullopt;
            return Pending{elapsed + dt, outcome.channel, pos,
                           std::move(outcome.state), false};
          }
        }
        if (to_boundary <= kBoundaryEps) {
          State hit = model_->flow(x, to_boundary);
          return Pending{elapsed + to_boundary, EventChannel::kHardKill, pos,
                         std::move(hit), false};
        }
        double look = std::min(horizon - elapsed, lookahead_cap);
        look = std::min(look, 0.5 * to_boundary);
        if (look <= 0) return std::nullopt;
        const double bound = model_->rate_bound(x, look);
        const double e = bound > 0 ? rng_.exponential(bound) : kInfiniteTime;
        if (e >= look) {
          x = model_->flow(x, look);
          elapsed += look;
          if (elapsed >= horizon) return std::nullopt;
          continue;
        }
        x = model_->flow(x, e);
        elapsed += e;
        const double rate = model_->event_rate(x);
        if (rng_.uniform01() * bound < rate) {
          auto outcome = model_->sample_event(x, rng_);
          return Pending{elapsed, outcome.channel, pos, std::move(outcome.state),
                         false};
        }
        // Poor acceptance means the bound is slack over this window; shrink it.
        if (rate < 0.1 * bound) lookahead_cap = std::max(look * 0.5, 16 * kBoundaryEps);
      }
      throw std::runtime_error("thinning failed to terminate; rate bound inconsistent");
    } else {
      (void)pos;
      (void)horizon;
      return std::nullopt;
    }
  }

  void drift_all(double dt) {
    if constexpr (is_flow) {
      if (dt <= 0) return;
      for (auto& p : state_.particles) p.state = model_->flow(p.state, dt);
    } else {
      (void)dt;
    }
  }

  void apply(Pending& ev) {
    if (ev.env_switch) {
      if constexpr (has_env) {
        state_.env = model_->sample_env(state_.env, rng_);
        record(EventKind::kMotion, 0, 0, state_.size(), state_.size());
      }
      return;
    }
    // Flow events carry the exact particle state at the event time; pin it
    // before acting so newborns and policies see the event location.
    if (ev.post_state) state_.particles[ev.pos].state = std::move(*ev.post_state);
    switch (ev.channel) {
      case EventChannel::kMotion:
        record(EventKind::kMotion, state_.particles[ev.pos].id, 0, state_.size(),
               state_.size());
        return;
      case EventChannel::kBranch:
        apply_branching(ev.pos);
        return;
      case EventChannel::kKill:
        apply_killing(ev.pos, EventKind::kSoftKill);
        return;
      case EventChannel::kHardKill:
        apply_killing(ev.pos, EventKind::kHardKill);
        return;
    }
  }

  /// Branching of the particle at `pos`: a copy is born with a fresh id; with
  /// probability q one of the N+1 particles (newborn included) is removed.
  void apply_branching(std::size_t pos) {
    const std::uint32_t n = state_.size();
    const std::uint64_t actor = state_.particles[pos].id;
    ++state_.count_branch;
    const double q = policy_.select_prob(context(pos));
    state_.particles.push_back(
        Particle<State>{state_.next_id++, state_.particles[pos].state, state_.time});
    const bool select = q > 0 && (q >= 1 || rng_.uniform01() < q);
    if (select) {
      const std::size_t j = rng_.uniform_below(n + 1);
      const std::uint64_t removed = state_.particles[j].id;
      state_.particles.erase(state_.particles.begin() + static_cast<std::ptrdiff_t>(j));
      state_.log_weight_b += std::log((n + 1.0) / n);
      ++state_.count_select;
      record(EventKind::kSelect, actor, removed, n, n);
    } else {
      record(EventKind::kBranch, actor, 0, n, n + 1);
    }
    state_.max_size_seen = std::max(state_.max_size_seen, state_.size());
    assert(state_.log_weight_b >= 0);
  }

  /// Killing of the particle at `pos` (already moved to its final, possibly
  /// absorbed, position): with probability p it is replaced by a copy of a
  /// uniformly chosen survivor, otherwise it is just removed.
  void apply_killing(std::size_t pos, EventKind kind) {
    const std::uint32_t n = state_.size();
    const std::uint64_t actor = state_.particles[pos].id;
    const double p = policy_.resample_prob(context(pos));
    if (n == 1 && p > 0)
      throw std::logic_error("policy returned p > 0 on a single-particle system");
    ++state_.count_kill;
    if (kind == EventKind::kHardKill) {
      // Simultaneous hard kills have probability zero for well-posed models;
      // when floating timestamps tie anyway, ids break the tie and the
      // trajectory is flagged so experiments can exclude it.
      if (state_.time == last_hard_kill_time_) state_.hard_kill_tie = true;
      last_hard_kill_time_ = state_.time;
    }
    const bool resample = p > 0 && (p >= 1 || rng_.uniform01() < p);
    state_.particles.erase(state_.particles.begin() + static_cast<std::ptrdiff_t>(pos));
    if (resample) {
      const std::size_t j = rng_.uniform_below(n - 1);
      const std::uint64_t partner = state_.particles[j].id;
      state_.particles.push_back(
          Particle<State>{state_.next_id++, state_.particles[j].state, state_.time});
      state_.log_weight_a += std::log((n - 1.0) / n);
      ++state_.count_resample;
      record(EventKind::kResample, actor, partner, n, n);
    } else {
      record(kind, actor, 0, n, n - 1);
    }
    assert(state_.log_weight_a <= 0);
  }

  void record(EventKind kind, std::uint64_t actor, std::uint64_t partner,
              std::uint32_t before, std::uint32_t after) {
    if (!opts_.record_events) return;
    events_.push_back(EventRecord{state_.time, kind, actor, partner, before, after});
  }

  const Model* model_;
  InteractionPolicy<State> policy_;
  RngStream rng_;
  EngineOptions opts_;
  ConfigRates<State> custom_;
  StateType state_;
  std::vector<EventRecord> events_;
  std::vector<double> rates_;  // scratch for propose_jump
  double last_hard_kill_time_ = -1;
};

/// Free-function form of the occupation measure.
template <ModelLike Model>
double occupation(const System<Model>& system,
                  const std::function<double(const typename Model::State&)>& f) {
  return system.occupation(f);
}

struct RunOptions {
  double horizon = 0;
  std::vector<double> grid;  // ascending snapshot times in [0, horizon]
  std::uint64_t event_cap = 100'000'000;
  bool record_events = false;
};

inline std::vector<double> uniform_grid(double horizon, std::size_t points) {
  std::vector<double> g;
  if (points == 0) return g;
  g.reserve(points);
  if (points == 1 || horizon == 0) {
    g.push_back(0.0);
    return g;
  }
  for (std::size_t i = 0; i + 1 < points; ++i)
    g.push_back(horizon * static_cast<double>(i) / static_cast<double>(points - 1));
  g.push_back(horizon);
  return g;
}

template <class State, class Env>
struct Trajectory {
  SnapshotSeries series;
  std::vector<EventRecord> events;
  SystemState<State, Env> final_state;
};

/// Simulate one trajectory to the horizon, emitting snapshots at the grid
/// times. If the system empties, later snapshots record occupation 0 with
/// the weights frozen at their final values.
template <ModelLike Model>
Trajectory<typename Model::State, typename detail::ModelEnv<Model>::type> run(
    const Model& model, std::vector<typename Model::State> initial,
    const InteractionPolicy<typename Model::State>& policy, const RunOptions& ro,
    const std::function<double(const typename Model::State&)>& f, RngStream rng) {
  if (ro.horizon < 0 || !std::isfinite(ro.horizon))
    throw std::invalid_argument("run: horizon must be finite and nonnegative");
  for (std::size_t i = 1; i < ro.grid.size(); ++i)
    if (!(ro.grid[i] > ro.grid[i - 1]))
      throw std::invalid_argument("run: grid times must be strictly increasing");
  if (!ro.grid.empty() && ro.grid.back() > ro.horizon)
    throw std::invalid_argument("run: grid exceeds horizon");

  System<Model> system(model, policy, std::move(initial), rng,
                       EngineOptions{ro.event_cap, ro.record_events});
  Trajectory<typename Model::State, typename detail::ModelEnv<Model>::type> out;
  out.series.rows.reserve(ro.grid.size());
  for (double g : ro.grid) {
    system.advance_to(g);
    out.series.rows.push_back(system.snapshot(f));
  }
  system.advance_to(ro.horizon);
  out.series.hard_kill_tie = system.state().hard_kill_tie;
  out.events = system.take_events();
  out.final_state = system.state();
  return out;
}

}  // namespace bbmmi
