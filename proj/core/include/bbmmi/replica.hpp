#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "bbmmi/engine.hpp"
#include "bbmmi/rng.hpp"
#include "bbmmi/series.hpp"

namespace bbmmi {

/// Dynamic scheduling over [0, count): workers steal the next index from a
/// shared counter. Results must be written to per-index slots so the outcome
/// is independent of the schedule.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  if (workers <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);  // drain remaining work
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), count));
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Pairwise summation: deterministic for a fixed index order and accurate to
/// O(log n) rounding growth, so aggregates are bitwise stable across worker
/// counts.
inline double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double acc = 0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

inline double pairwise_mean(std::span<const double> values) {
  return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

/// Simulate `count` independent replicas with streams derived from the master
/// seed, in parallel; replica r always uses stream (seed, r, "engine"), so the
/// batch is reproducible for any worker count.
template <ModelLike Model>
ReplicaBatch run_replicas(
    const Model& model, const InteractionPolicy<typename Model::State>& policy,
    const std::vector<typename Model::State>& initial, const RunOptions& ro,
    const std::function<double(const typename Model::State&)>& f,
    std::uint64_t master_seed, std::size_t count, int workers,
    std::vector<std::vector<EventRecord>>* event_logs = nullptr) {
  ReplicaBatch batch;
  batch.master_seed = master_seed;
  batch.grid = ro.grid;
  batch.replicas.resize(count);
  if (event_logs) event_logs->resize(count);
  parallel_for(count, workers, [&](std::size_t r) {
    auto traj = run(model, initial, policy, ro, f,
                    derive_stream(master_seed, r, "engine"));
    batch.replicas[r] = std::move(traj.series);
    if (event_logs) (*event_logs)[r] = std::move(traj.events);
  });
  return batch;
}

}  // namespace bbmmi
