#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "bbmmi/engine.hpp"
#include "bbmmi/errors.hpp"
#include "bbmmi/replica.hpp"
#include "bbmmi/series.hpp"

namespace bbmmi {

struct Estimate {
  double value = 0;
  double std_error = 0;
};

/// Monte Carlo estimate of m_0 Q_t f: the replica mean of
/// Pi^A_t Pi^B_t m_t f, with emptied replicas contributing 0.
Estimate many_to_one(const ReplicaBatch& batch, double t);

/// m_t f / m_t 1 when the system is alive at t, empty optional otherwise.
std::optional<double> normalized(const SnapshotSeries& series, double t);

/// Single-trajectory growth-rate estimate:
/// (log Pi^A_T + log Pi^B_T + log(m_T 1 / m_0 1)) / T. The mass ratio makes
/// the estimator exact for varying population size and vanishes in the
/// constant-size regime.
double lambda_hat(const SnapshotSeries& series, double t);

/// Windowed growth-rate estimate over n equal windows of [0, T]:
/// log of the window-averaged weight ratios divided by the window length.
double lambda_bar(const SnapshotSeries& series, double t, int windows);

struct MetricReport {
  double mean = 0;            // replica/time average of the normalised observable
  double bias = 0;            // |mean - nu(f)|
  double std_dev = 0;         // stationary per-draw spread of the normalised observable
  double event_rate = 0;      // (A_T + B_T) per unit time after burn-in
  double mean_std_error = 0;  // confidence radius from replica-level variation
  std::size_t replicas = 0;
};

/// Long-run metrics of the normalised occupation measure against the oracle
/// stationary value nu(f): bias, spread and interaction-event cost.
MetricReport stationary_metrics(const ReplicaBatch& batch, double nu_f,
                                double burn_in_fraction = 0.2);

struct PfConfig {
  double horizon = 1.0;           // T
  double window = 0.1;            // delta t
  int replica_systems = 1;        // N*
  double ess_threshold = 1.0;     // resample when ESS <= threshold * N*
  std::uint64_t event_cap = 100'000'000;
};

struct PfStats {
  std::uint64_t events = 0;   // engine events across all surviving systems
  std::uint64_t windows = 0;
  std::uint64_t resampling_rounds = 0;
};

/// Particle filter over whole replica systems: N* independent copies advance
/// window by window; each window multiplies the global weight W by the mean
/// of the per-system weight ratios w_i and (by default) multinomially
/// resamples entire systems proportional to w_i. Returns log(W) / T.
/// Emptied systems carry weight 0; a window in which every system emptied
/// raises AllWeightsZero.
template <ModelLike Model>
double pf_lambda(const Model& model,
                 const InteractionPolicy<typename Model::State>& policy,
                 const std::vector<typename Model::State>& initial,
                 const PfConfig& cfg, std::uint64_t master_seed, int workers = 1,
                 PfStats* stats = nullptr) {
  if (cfg.replica_systems < 1)
    throw std::invalid_argument("pf_lambda: need at least one replica system");
  if (!(cfg.window > 0)) throw std::invalid_argument("pf_lambda: window must be > 0");
  const std::size_t n = static_cast<std::size_t>(cfg.replica_systems);

  std::vector<System<Model>> systems;
  systems.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    systems.emplace_back(model, policy, initial,
                         derive_stream(master_seed, i, "pf-system"),
                         EngineOptions{cfg.event_cap, false});
  RngStream resample_rng = derive_stream(master_seed, 0, "pf-resample");

  double log_w = 0;
  double t = 0;
  std::vector<double> weights(n);
  while (t < cfg.horizon) {
    const double t_next = std::min(t + cfg.window, cfg.horizon);
    std::vector<double> log_before(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = systems[i].state();
      log_before[i] = s.log_weight_a + s.log_weight_b;
    }
    parallel_for(n, workers, [&](std::size_t i) { systems[i].advance_to(t_next); });
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = systems[i].state();
      weights[i] = s.particles.empty()
                       ? 0.0
                       : std::exp(s.log_weight_a + s.log_weight_b - log_before[i]);
    }
    const double mean_w = pairwise_mean(weights);
    if (!(mean_w > 0))
      throw AllWeightsZero("every replica system emptied in a window");
    log_w += std::log(mean_w);
    t = t_next;
    if (stats) ++stats->windows;
    if (t >= cfg.horizon) break;

    bool resample = cfg.ess_threshold >= 1.0;
    if (!resample && cfg.ess_threshold > 0) {
      double sum = 0, sum_sq = 0;
      for (double w : weights) {
        sum += w;
        sum_sq += w * w;
      }
      const double ess = sum * sum / sum_sq;
      resample = ess <= cfg.ess_threshold * static_cast<double>(n);
    }
    if (resample) {
      if (stats) ++stats->resampling_rounds;
      // Streams stay with slots, not with the copied states: each slot
      // continues its own stream, so copies evolve independently and the
      // single-system filter is bitwise identical to a plain trajectory.
      std::vector<double> cumulative(n);
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) cumulative[i] = (acc += weights[i]);
      std::vector<RngStream> slot_streams;
      slot_streams.reserve(n);
      for (std::size_t i = 0; i < n; ++i) slot_streams.push_back(systems[i].rng());
      std::vector<System<Model>> next;
      next.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double u = resample_rng.uniform01() * acc;
        std::size_t pick = 0;
        while (pick + 1 < n && cumulative[pick] <= u) ++pick;
        next.push_back(systems[pick]);
        next.back().set_rng(slot_streams[i]);
      }
      systems = std::move(next);
    }
  }
  if (stats)
    for (const auto& system : systems) stats->events += system.state().count_events;
  return log_w / cfg.horizon;
}

}  // namespace bbmmi
