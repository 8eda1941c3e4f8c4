#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bbmmi/errors.hpp"

namespace bbmmi {

enum class ModelPreset {
  kBenchmark,        // branching birth-death benchmark chain
  kBenchmarkKilled,  // its killed Fleming-Viot counterpart
  kSingleState,
  kBirthDeath,       // custom (multi-dimensional) chain from rate tables
  kBrw,              // branching random walk, shared switching environment
  kBrwPerParticle,
  kNrwSlab,
};

enum class PolicyKind { kNminNmax, kConstant, kSizeSoftened };

/// Piecewise-constant table over integer states, e.g. "1..4:2.0, 5:3.5, *:1".
/// Entries are ranges (lo..hi), single points, or the default '*'.
struct PiecewiseTable {
  struct Piece {
    std::int64_t lo;
    std::int64_t hi;
    double value;
  };
  std::vector<Piece> pieces;
  std::optional<double> fallback;

  double operator()(std::int64_t x) const;
  double max_value() const;
};

PiecewiseTable parse_piecewise(const std::string& text);

struct ModelConfig {
  ModelPreset preset = ModelPreset::kBenchmark;
  // benchmark family
  std::int32_t m = 10;  // 0 = unbounded
  // single-state
  double branch = 1.0;
  double kill = 0.0;
  double motion = 0.0;
  // custom birth-death
  int dimension = 1;
  std::vector<PiecewiseTable> birth_tables;  // per coordinate, keyed on x_i
  std::vector<PiecewiseTable> death_tables;
  PiecewiseTable branch_table;  // keyed on the coordinate sum
  PiecewiseTable kill_table;
  std::int32_t cap = -1;
  double branch_bound = 0;  // 0: derive from the table when capped
  // branching random walk
  std::int32_t n = 10;
  double p_right = 0.5;
  double s_on = 1.0;
  double s_off = 1.0;
  double rate_draw = 1.0;
  // neutron slab
  double length = 2.0;
  std::vector<double> velocities = {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0};
  double v_min = 0.5;
  double v_max = 2.0;
  double alpha = 1.0;
};

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kNminNmax;
  std::uint32_t nmin = 0;
  std::uint32_t nmax = 0;  // 0 = unbounded
  double p = 0.0;
  double q = 0.0;
};

struct RunConfig {
  double horizon = 1.0;
  std::size_t grid_points = 11;
  std::uint32_t initial_size = 2;
  std::string initial_state = "1";  // model-dependent encoding, comma separated
  std::size_t replicas = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  std::uint64_t event_cap = 100'000'000;
  bool event_log = false;
  std::string observable = "identity";
  bool unbounded_ok = false;
};

struct LambdaConfig {
  double horizon = 4000;
  int windows = 4000;
  int pf_systems = 100;
  double pf_horizon = 40;
  double pf_window = 0.4;
  int repeats = 3;
  double ess_threshold = 1.0;
};

struct TableConfig {
  std::uint32_t n = 10;
  double horizon = 200;
  std::size_t replicas = 200;
  double burn_in = 0.2;
};

struct ExperimentConfig {
  ModelConfig model;
  PolicyConfig policy;
  RunConfig run;
  LambdaConfig lambda;
  TableConfig table;
  std::string output_dir = "out";

  /// One "section.key=value" line per entry, for the output-file echo.
  std::vector<std::string> echo() const;
};

/// Parse the INI-style configuration file. Syntax and semantic errors carry
/// the line number of the offending entry.
ExperimentConfig load_config(const std::string& path);

ExperimentConfig default_config();

}  // namespace bbmmi
