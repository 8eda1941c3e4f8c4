#include "bbmmi/csv.hpp"

#include <cstdio>

#include "bbmmi/rng.hpp"
#include "bbmmi/version.hpp"

namespace bbmmi {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_csv_header(std::ostream& os, const CsvMetadata& meta) {
  os << "# bbmmi " << kVersion << "\n";
  os << "# rng " << RngStream::kAlgorithm << "\n";
  os << "# seed " << meta.seed << "\n";
  for (const auto& line : meta.config_echo) os << "# config " << line << "\n";
  os << "# replica-status " << meta.replica_status << "\n";
  for (const auto& line : meta.extra_comments) os << "# " << line << "\n";
}

void write_trajectory_csv(std::ostream& os, const ReplicaBatch& batch,
                          const CsvMetadata& meta) {
  write_csv_header(os, meta);
  os << "replica,time,N,A,B,C,beta,logPiA,logPiB,occ_f,occ_1\n";
  for (std::size_t r = 0; r < batch.replicas.size(); ++r) {
    for (const auto& row : batch.replicas[r].rows) {
      os << r << ',' << format_double(row.time) << ',' << row.size << ','
         << row.resamples << ',' << row.selections << ',' << row.events << ','
         << row.branches << ',' << format_double(row.log_pi_a) << ','
         << format_double(row.log_pi_b) << ',' << format_double(row.occ_f) << ','
         << format_double(row.occ_1) << "\n";
    }
  }
}

void write_event_log(std::ostream& os,
                     std::span<const std::vector<EventRecord>> per_replica,
                     const CsvMetadata& meta) {
  write_csv_header(os, meta);
  os << "replica,time,kind,actor,partner,size_before,size_after\n";
  for (std::size_t r = 0; r < per_replica.size(); ++r) {
    for (const auto& ev : per_replica[r]) {
      os << r << ',' << format_double(ev.time) << ',' << to_string(ev.kind) << ','
         << ev.actor << ',' << ev.partner << ',' << ev.size_before << ','
         << ev.size_after << "\n";
    }
  }
}

}  // namespace bbmmi
