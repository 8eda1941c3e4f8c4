#pragma once

#include <iosfwd>
#include <string>

#include "bbmmi/config.hpp"

namespace bbmmi {

/// Run R replicas and write the snapshot CSV (and the event log when
/// enabled) under the configured output directory. Returns the trajectory
/// file path.
std::string cmd_simulate(const ExperimentConfig& cfg, std::ostream& diag);

/// Sweep M in {10, 100, 1000, inf} x {nmin-nmax, FV} at the preset's N and
/// write the bias/std/event-rate table. preset is "table1" (N=10) or
/// "table2" (N=100); cfg.table overrides horizon, replicas and burn-in.
std::string cmd_table(const ExperimentConfig& cfg, const std::string& preset,
                      std::ostream& diag);

/// Compare the growth-rate estimators (single-trajectory, windowed, particle
/// filter) against the exact oracle value where one exists.
std::string cmd_lambda(const ExperimentConfig& cfg, std::ostream& diag);

/// Exact leading triple of the configured finite-state model as CSV.
std::string cmd_oracle(const ExperimentConfig& cfg, std::ostream& diag);

/// Engine throughput on the benchmark presets.
std::string cmd_bench(const ExperimentConfig& cfg, std::ostream& diag);

}  // namespace bbmmi
