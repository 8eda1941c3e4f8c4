#include "bbmmi/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bbmmi/replica.hpp"

namespace bbmmi {

namespace {

const Snapshot& snapshot_at(const SnapshotSeries& series, double t) {
  for (const auto& row : series.rows) {
    if (std::abs(row.time - t) <= 1e-12 * std::max(1.0, std::abs(t))) return row;
  }
  throw std::invalid_argument("requested time is not on the snapshot grid");
}

}  // namespace

const Snapshot& SnapshotSeries::at_time(double t) const { return snapshot_at(*this, t); }

Estimate many_to_one(const ReplicaBatch& batch, double t) {
  const std::size_t r = batch.replicas.size();
  if (r == 0) throw std::invalid_argument("many_to_one: empty batch");
  std::vector<double> values(r);
  for (std::size_t i = 0; i < r; ++i) {
    const Snapshot& s = snapshot_at(batch.replicas[i], t);
    values[i] = std::exp(s.log_pi_a + s.log_pi_b) * s.occ_f;
  }
  Estimate out;
  out.value = pairwise_mean(values);
  if (r > 1) {
    std::vector<double> sq(r);
    for (std::size_t i = 0; i < r; ++i) {
      const double d = values[i] - out.value;
      sq[i] = d * d;
    }
    out.std_error = std::sqrt(pairwise_sum(sq) / (static_cast<double>(r) - 1) /
                              static_cast<double>(r));
  }
  return out;
}

std::optional<double> normalized(const SnapshotSeries& series, double t) {
  const Snapshot& s = snapshot_at(series, t);
  if (s.occ_1 <= 0) return std::nullopt;
  return s.occ_f / s.occ_1;
}

double lambda_hat(const SnapshotSeries& series, double t) {
  if (series.rows.empty()) throw std::invalid_argument("lambda_hat: empty series");
  if (!(t > 0)) throw std::invalid_argument("lambda_hat: need t > 0");
  const Snapshot& front = series.rows.front();
  const Snapshot& s = snapshot_at(series, t);
  if (s.occ_1 <= 0) throw EmptySystem("lambda_hat: system emptied before the horizon");
  return (s.log_pi_a + s.log_pi_b + std::log(s.occ_1 / front.occ_1)) / t;
}

double lambda_bar(const SnapshotSeries& series, double t, int windows) {
  if (windows < 1) throw std::invalid_argument("lambda_bar: need at least one window");
  const Snapshot& end = snapshot_at(series, t);
  if (end.occ_1 <= 0) throw EmptySystem("lambda_bar: system emptied before the horizon");
  const double dt = t / windows;
  std::vector<double> log_ratios(static_cast<std::size_t>(windows));
  for (int i = 0; i < windows; ++i) {
    const Snapshot& a = snapshot_at(series, dt * i);
    const Snapshot& b = snapshot_at(series, i + 1 == windows ? t : dt * (i + 1));
    log_ratios[static_cast<std::size_t>(i)] =
        (b.log_pi_a + b.log_pi_b) - (a.log_pi_a + a.log_pi_b);
  }
  // log of the mean ratio, computed as a log-sum-exp for stability
  const double peak = *std::max_element(log_ratios.begin(), log_ratios.end());
  double acc = 0;
  for (double lr : log_ratios) acc += std::exp(lr - peak);
  return (peak + std::log(acc / windows)) / dt;
}

MetricReport stationary_metrics(const ReplicaBatch& batch, double nu_f,
                                double burn_in_fraction) {
  if (batch.replicas.empty() || batch.grid.empty())
    throw std::invalid_argument("stationary_metrics: empty batch");
  if (burn_in_fraction < 0 || burn_in_fraction >= 1)
    throw std::invalid_argument("stationary_metrics: burn-in fraction in [0,1)");
  const double horizon = batch.grid.back();
  const double burn = burn_in_fraction * horizon;

  MetricReport report;
  report.replicas = batch.replicas.size();
  std::vector<double> replica_means;
  replica_means.reserve(batch.replicas.size());
  std::vector<double> pooled;
  std::vector<double> rates;
  rates.reserve(batch.replicas.size());
  for (const auto& series : batch.replicas) {
    double acc = 0;
    std::size_t count = 0;
    const Snapshot* first_kept = nullptr;
    for (const auto& row : series.rows) {
      if (row.time < burn) continue;
      if (!first_kept) first_kept = &row;
      if (row.occ_1 > 0) {
        const double value = row.occ_f / row.occ_1;
        acc += value;
        pooled.push_back(value);
        ++count;
      }
    }
    if (count > 0) replica_means.push_back(acc / static_cast<double>(count));
    const Snapshot& last = series.rows.back();
    const double span = horizon - (first_kept ? first_kept->time : 0.0);
    if (span > 0 && first_kept) {
      const double events =
          static_cast<double>(last.resamples + last.selections) -
          static_cast<double>(first_kept->resamples + first_kept->selections);
      rates.push_back(events / span);
    }
  }
  if (replica_means.empty())
    throw EmptySystem("stationary_metrics: every replica emptied before burn-in");

  report.mean = pairwise_mean(replica_means);
  report.bias = std::abs(report.mean - nu_f);
  report.event_rate = pairwise_mean(rates);
  if (replica_means.size() > 1) {
    std::vector<double> sq(replica_means.size());
    for (std::size_t i = 0; i < replica_means.size(); ++i) {
      const double d = replica_means[i] - report.mean;
      sq[i] = d * d;
    }
    report.mean_std_error =
        std::sqrt(pairwise_sum(sq) / (static_cast<double>(replica_means.size()) - 1) /
                  static_cast<double>(replica_means.size()));
  }
  if (pooled.size() > 1) {
    std::vector<double> sq(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i) {
      const double d = pooled[i] - report.mean;
      sq[i] = d * d;
    }
    report.std_dev =
        std::sqrt(pairwise_sum(sq) / (static_cast<double>(pooled.size()) - 1));
  }
  return report;
}

}  // namespace bbmmi
