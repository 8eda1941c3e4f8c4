#pragma once

#include <cstdint>
#include <vector>

namespace bbmmi {

/// One grid-time row of a trajectory: counters, log-weights and the
/// occupation values of the requested observable f and of 1.
struct Snapshot {
  double time = 0;
  std::uint32_t size = 0;
  std::uint64_t resamples = 0;   // A_t
  std::uint64_t selections = 0;  // B_t
  std::uint64_t events = 0;      // C_t, every event the engine processed
  std::uint64_t branches = 0;    // beta_t
  double log_pi_a = 0;
  double log_pi_b = 0;
  double occ_f = 0;
  double occ_1 = 0;
};

struct SnapshotSeries {
  std::vector<Snapshot> rows;
  bool hard_kill_tie = false;

  const Snapshot& at_time(double t) const;
};

/// Trajectories of R independent replicas on a common snapshot grid.
struct ReplicaBatch {
  std::vector<SnapshotSeries> replicas;
  std::vector<double> grid;
  std::uint64_t master_seed = 0;
};

}  // namespace bbmmi
