#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bbmmi/engine.hpp"
#include "bbmmi/series.hpp"

namespace bbmmi {

/// Full-precision, locale-independent formatting; byte-stable across runs.
std::string format_double(double value);

/// Comment header carried by every output file: tool version, RNG algorithm,
/// the full configuration echo and the per-replica guard status.
struct CsvMetadata {
  std::uint64_t seed = 0;
  std::vector<std::string> config_echo;     // one line per config entry
  std::string replica_status = "ok";        // "ok" or e.g. "tie-flagged:3,17"
  std::vector<std::string> extra_comments;  // free-form additions
};

void write_csv_header(std::ostream& os, const CsvMetadata& meta);

/// Snapshot schema: replica,time,N,A,B,C,beta,logPiA,logPiB,occ_f,occ_1.
void write_trajectory_csv(std::ostream& os, const ReplicaBatch& batch,
                          const CsvMetadata& meta);

/// Line-delimited event records: replica,time,kind,actor,partner,
/// size_before,size_after.
void write_event_log(std::ostream& os,
                     std::span<const std::vector<EventRecord>> per_replica,
                     const CsvMetadata& meta);

}  // namespace bbmmi
