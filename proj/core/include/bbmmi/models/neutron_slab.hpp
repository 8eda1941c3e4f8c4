#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bbmmi/process.hpp"
#include "bbmmi/rng.hpp"

namespace bbmmi::models {

/// Neutron random walk in the 1-D slab (0, L) with a finite velocity set,
/// base scatter rate alpha(r, v) and a row-stochastic scatter matrix pi.
struct NrwSlabSpec {
  double length = 2.0;
  std::vector<double> velocities;
  double v_min = 0.5;
  double v_max = 2.0;
  std::function<double(double, double)> alpha;  // alpha(r, v)
  double alpha_sup = 1.0;
  std::vector<std::vector<double>> scatter;     // pi[i][j], rows sum to 1

  void validate() const {
    if (!(length > 0)) throw std::invalid_argument("nrw: slab length must be positive");
    if (velocities.empty()) throw std::invalid_argument("nrw: empty velocity set");
    if (!(v_min > 0) || !(v_max >= v_min))
      throw std::invalid_argument("nrw: need 0 < v_min <= v_max");
    for (double v : velocities) {
      const double speed = std::abs(v);
      if (v == 0.0 || speed < v_min || speed > v_max)
        throw std::invalid_argument(
            "nrw: velocities must lie in [-v_max,-v_min] U [v_min,v_max]");
    }
    if (!alpha || !(alpha_sup > 0))
      throw std::invalid_argument("nrw: scatter rate and its sup are required");
    if (scatter.size() != velocities.size())
      throw std::invalid_argument("nrw: scatter matrix shape mismatch");
    for (const auto& row : scatter) {
      if (row.size() != velocities.size())
        throw std::invalid_argument("nrw: scatter matrix shape mismatch");
      double sum = 0;
      for (double p : row) {
        if (p < 0) throw std::invalid_argument("nrw: scatter entries must be >= 0");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("nrw: scatter rows must sum to 1");
    }
  }
};

/// The h-transformed walk: h(r,v) = phi(time to exit along v), where phi is
/// the C^1 monotone plateau smoothing with phi(x) = x below delta/2 and
/// phi = delta = 1/(2 sup alpha) above delta. Scattering is biased by
/// h(r,v')/h(r,v), which steers the walk away from the boundary, and the
/// generator ratio Lh/h supplies the branch rate (positive part) and soft
/// kill rate (negative part) of the Feynman-Kac representation.
class NrwSlabModel {
 public:
  struct State {
    double r;
    std::int32_t v;  // index into the velocity table
  };

  explicit NrwSlabModel(NrwSlabSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    delta_ = 1.0 / (2.0 * spec_.alpha_sup);
  }

  /// Copy of the model with branching and soft killing switched off: the
  /// plain h-transformed motion, which never reaches the boundary.
  NrwSlabModel pure_motion() const {
    NrwSlabModel copy = *this;
    copy.feynman_kac_ = false;
    return copy;
  }

  double plateau() const { return delta_; }
  double velocity(std::int32_t i) const {
    return spec_.velocities[static_cast<std::size_t>(i)];
  }
  std::size_t velocity_count() const { return spec_.velocities.size(); }
  double length() const { return spec_.length; }

  /// kappa_{r,v}: time to exit (0, L) from r moving at velocity v.
  double exit_time(double r, std::int32_t vi) const {
    const double v = velocity(vi);
    return v > 0 ? (spec_.length - r) / v : r / (-v);
  }

  double phi(double x) const {
    if (x <= 0.5 * delta_) return std::max(x, 0.0);
    if (x >= delta_) return delta_;
    // Monotone cubic Hermite on [delta/2, delta] with slopes 1 and 0.
    const double w = 0.5 * delta_;
    const double s = (x - w) / w;
    const double h00 = (2 * s - 3) * s * s + 1;
    const double h10 = ((s - 2) * s + 1) * s;
    const double h01 = (3 - 2 * s) * s * s;
    return h00 * w + h10 * w + h01 * delta_;
  }

  double phi_prime(double x) const {
    if (x <= 0) return 0.0;
    if (x <= 0.5 * delta_) return 1.0;
    if (x >= delta_) return 0.0;
    const double w = 0.5 * delta_;
    const double s = (x - w) / w;
    return 1.0 + (2.0 - 3.0 * s) * s;  // (1-s)(3s+1)
  }

  double h(const State& x) const { return phi(exit_time(x.r, x.v)); }

  /// Lh/h = [-phi'(kappa_{r,v}) + alpha(r,v) sum_v' (h(r,v') - h(r,v)) pi(v,v')] / h;
  /// the transport term uses the fact that kappa decreases at unit rate
  /// along the flow.
  double generator_ratio(const State& x) const {
    const double hx = h(x);
    const double transport = -phi_prime(exit_time(x.r, x.v));
    const double a = spec_.alpha(x.r, velocity(x.v));
    double integral = 0;
    const auto& row = spec_.scatter[static_cast<std::size_t>(x.v)];
    for (std::size_t j = 0; j < row.size(); ++j)
      integral += (phi(exit_time(x.r, static_cast<std::int32_t>(j))) - hx) * row[j];
    return (transport + a * integral) / hx;
  }

  double branch_rate(const State& x) const {
    if (!feynman_kac_) return 0.0;
    return std::max(generator_ratio(x), 0.0);
  }

  double kill_rate(const State& x) const {
    if (!feynman_kac_) return 0.0;
    return std::max(-generator_ratio(x), 0.0);
  }

  /// Total rate of the biased scatter kernel alpha pi(v,v') h(r,v')/h(r,v).
  double scatter_rate(const State& x) const {
    const double hx = h(x);
    const double a = spec_.alpha(x.r, velocity(x.v));
    double sum = 0;
    const auto& row = spec_.scatter[static_cast<std::size_t>(x.v)];
    for (std::size_t j = 0; j < row.size(); ++j)
      sum += row[j] * phi(exit_time(x.r, static_cast<std::int32_t>(j)));
    return a * sum / hx;
  }

  State flow(const State& x, double dt) const {
    return State{x.r + velocity(x.v) * dt, x.v};
  }

  double boundary_hit_time(const State& x) const { return exit_time(x.r, x.v); }

  double event_rate(const State& x) const {
    double rate = scatter_rate(x);
    if (feynman_kac_) rate += std::abs(generator_ratio(x));
    return rate;
  }

  /// Valid along the flow for the horizon: h is monotone along each flow
  /// line (kappa decreases at unit rate), so its minimum over the segment
  /// sits at the far end; the numerators are bounded by sup alpha * delta
  /// and by the worst slope of phi.
  double rate_bound(const State& x, double horizon) const {
    const double remaining = exit_time(x.r, x.v) - horizon;
    if (remaining <= 0) return std::numeric_limits<double>::infinity();
    const double h_min = phi(remaining);
    return (2.0 * spec_.alpha_sup * delta_ + kPhiSlopeMax) / h_min;
  }

  FlowEventOutcome<State> sample_event(const State& x, RngStream& rng) const {
    const double s = scatter_rate(x);
    const double b = branch_rate(x);
    const double k = kill_rate(x);
    const double u = rng.uniform01() * (s + b + k);
    if (u < s) return {EventChannel::kMotion, State{x.r, sample_scatter(x, rng)}};
    if (u < s + b) return {EventChannel::kBranch, x};
    return {EventChannel::kKill, x};
  }

  /// Exact resolution of the race against the wall. With u = time to exit,
  /// the linear region has h = u, scatter rate a S / u and (with the
  /// Feynman-Kac rates on) kill rate (1 - a S + a u) / u, so the total rate
  /// is exactly 1/u + a and the first arrival is sampleable in closed form:
  /// the 1/u part alone places it uniformly on [0, u0]. Every arrival lands
  /// strictly before the wall, matching the almost-sure boundary avoidance
  /// of the transformed walk. Called by the engine once u0 is tiny, where
  /// freezing the slowly varying a and S across the remaining flight is
  /// below float resolution.
  std::pair<double, FlowEventOutcome<State>> boundary_endgame(
      const State& x, RngStream& rng) const {
    const double u0 = exit_time(x.r, x.v);
    const double a = spec_.alpha(x.r, velocity(x.v));
    const auto& row = spec_.scatter[static_cast<std::size_t>(x.v)];
    double amount = 0;  // S = sum pi(v,v') h(r,v')
    for (std::size_t j = 0; j < row.size(); ++j)
      amount += row[j] * phi(exit_time(x.r, static_cast<std::int32_t>(j)));
    const double c_scatter = a * amount;

    double dt;
    if (feynman_kac_) {
      // total rate 1/u + a: superpose a Uniform(0, u0) arrival with Exp(a).
      dt = u0 * rng.uniform01();
      if (a > 0) dt = std::min(dt, rng.exponential(a));
    } else {
      if (c_scatter <= 1e-300)
        return {u0, FlowEventOutcome<State>{EventChannel::kHardKill,
                                            flow(x, u0)}};
      dt = u0 * (1.0 - std::pow(rng.uniform01(), 1.0 / c_scatter));
    }
    // Keep the event position representably inside the slab; the induced
    // displacement is below 1e-12 time units.
    dt = std::min(dt, u0 * (1.0 - 1e-3));
    const double u_event = u0 - dt;
    const State at{x.r + velocity(x.v) * dt, x.v};
    if (!feynman_kac_)
      return {dt, FlowEventOutcome<State>{EventChannel::kMotion,
                                          State{at.r, sample_scatter(at, rng)}}};
    // Classify with the u-multiplied weights: scatter aS vs kill 1-aS+a u.
    const double w_scatter = c_scatter;
    const double w_kill = std::max(0.0, 1.0 - c_scatter + a * u_event);
    if (rng.uniform01() * (w_scatter + w_kill) < w_scatter)
      return {dt, FlowEventOutcome<State>{EventChannel::kMotion,
                                          State{at.r, sample_scatter(at, rng)}}};
    return {dt, FlowEventOutcome<State>{EventChannel::kKill, at}};
  }

  /// New velocity index drawn proportional to pi(v, v') h(r, v').
  std::int32_t sample_scatter(const State& x, RngStream& rng) const {
    const auto& row = spec_.scatter[static_cast<std::size_t>(x.v)];
    double total = 0;
    for (std::size_t j = 0; j < row.size(); ++j)
      total += row[j] * phi(exit_time(x.r, static_cast<std::int32_t>(j)));
    double u = rng.uniform01() * total;
    std::int32_t pick = x.v;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double w = row[j] * phi(exit_time(x.r, static_cast<std::int32_t>(j)));
      if ((u -= w) < 0 && w > 0) return static_cast<std::int32_t>(j);
      if (w > 0) pick = static_cast<std::int32_t>(j);
    }
    return pick;
  }

  bool is_absorbed(const State& x) const { return x.r <= 0 || x.r >= spec_.length; }

  double branch_rate_bound() const {
    // b > 0 needs phi' < 1, i.e. h >= phi(delta/2) = delta/2, and Lh <= alpha delta.
    return feynman_kac_ ? 2.0 * spec_.alpha_sup : 0.0;
  }

  const NrwSlabSpec& spec() const { return spec_; }

  /// A symmetric default: uniform scattering at unit rate.
  static NrwSlabModel example(double length = 2.0,
                              std::vector<double> velocities = {-2.0, -1.0, -0.5, 0.5,
                                                                1.0, 2.0}) {
    NrwSlabSpec spec;
    spec.length = length;
    spec.velocities = std::move(velocities);
    spec.v_min = 0.5;
    spec.v_max = 2.0;
    spec.alpha = [](double, double) { return 1.0; };
    spec.alpha_sup = 1.0;
    const std::size_t n = spec.velocities.size();
    spec.scatter.assign(n, std::vector<double>(n, 1.0 / static_cast<double>(n)));
    return NrwSlabModel(std::move(spec));
  }

 private:
  static constexpr double kPhiSlopeMax = 4.0 / 3.0;  // max of (1-s)(3s+1) on [0,1]

  NrwSlabSpec spec_;
  double delta_;
  bool feynman_kac_ = true;
};

}  // namespace bbmmi::models
