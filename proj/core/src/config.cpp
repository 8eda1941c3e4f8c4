#include "bbmmi/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

namespace bbmmi {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

/// Line number of `key` inside `[section]`, for error messages.
int line_of(const std::string& path, const std::string& section,
            const std::string& key) {
  std::ifstream in(path);
  std::string line;
  int number = 0;
  bool inside = false;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.size() > 1 && t.front() == '[')
      inside = t == "[" + section + "]";
    else if (inside && t.rfind(key, 0) == 0) {
      const std::string rest = trim(t.substr(key.size()));
      if (!rest.empty() && rest.front() == '=') return number;
    }
  }
  return 0;
}

[[noreturn]] void fail(const std::string& path, const std::string& section,
                       const std::string& key, const std::string& what) {
  std::ostringstream os;
  os << path;
  if (const int line = line_of(path, section, key)) os << ":" << line;
  os << ": [" << section << "] " << key << ": " << what;
  throw ConfigError(os.str());
}

}  // namespace

double PiecewiseTable::operator()(std::int64_t x) const {
  for (const auto& piece : pieces)
    if (x >= piece.lo && x <= piece.hi) return piece.value;
  if (fallback) return *fallback;
  throw std::out_of_range("piecewise table has no entry for state " +
                          std::to_string(x));
}

double PiecewiseTable::max_value() const {
  double best = fallback.value_or(-std::numeric_limits<double>::infinity());
  for (const auto& piece : pieces) best = std::max(best, piece.value);
  return best;
}

PiecewiseTable parse_piecewise(const std::string& text) {
  PiecewiseTable table;
  for (const std::string& entry : split(text, ',')) {
    if (entry.empty()) continue;
    const auto colon = entry.rfind(':');
    if (colon == std::string::npos)
      throw ConfigError("piecewise entry '" + entry + "' needs key:value");
    const std::string key = trim(entry.substr(0, colon));
    const double value = std::stod(entry.substr(colon + 1));
    if (key == "*") {
      table.fallback = value;
      continue;
    }
    const auto dots = key.find("..");
    if (dots == std::string::npos) {
      const std::int64_t x = std::stoll(key);
      table.pieces.push_back({x, x, value});
    } else {
      const std::int64_t lo = std::stoll(key.substr(0, dots));
      const std::int64_t hi = std::stoll(key.substr(dots + 2));
      if (hi < lo) throw ConfigError("piecewise range '" + key + "' is empty");
      table.pieces.push_back({lo, hi, value});
    }
  }
  if (table.pieces.empty() && !table.fallback)
    throw ConfigError("piecewise table '" + text + "' is empty");
  return table;
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

namespace {

using boost::property_tree::ptree;

std::int32_t parse_m(const std::string& value) {
  if (value == "inf" || value == "infinity") return 0;
  return static_cast<std::int32_t>(std::stol(value));
}

void apply_model(ExperimentConfig& cfg, const std::string& path,
                 const std::string& key, const std::string& value) {
  auto& m = cfg.model;
  if (key == "preset") {
    if (value == "benchmark") m.preset = ModelPreset::kBenchmark;
    else if (value == "benchmark-killed") m.preset = ModelPreset::kBenchmarkKilled;
    else if (value == "single-state") m.preset = ModelPreset::kSingleState;
    else if (value == "birth-death") m.preset = ModelPreset::kBirthDeath;
    else if (value == "brw") m.preset = ModelPreset::kBrw;
    else if (value == "brw-per-particle") m.preset = ModelPreset::kBrwPerParticle;
    else if (value == "nrw-slab") m.preset = ModelPreset::kNrwSlab;
    else fail(path, "model", key, "unknown preset '" + value + "'");
  } else if (key == "m") m.m = parse_m(value);
  else if (key == "branch") m.branch = std::stod(value);
  else if (key == "kill") m.kill = std::stod(value);
  else if (key == "motion") m.motion = std::stod(value);
  else if (key == "dimension") m.dimension = std::stoi(value);
  else if (key.rfind("birth", 0) == 0 && key.size() > 5) {
    const std::size_t i = std::stoul(key.substr(5));
    if (i == 0) fail(path, "model", key, "coordinates are 1-based");
    if (m.birth_tables.size() < i) m.birth_tables.resize(i);
    m.birth_tables[i - 1] = parse_piecewise(value);
  } else if (key.rfind("death", 0) == 0 && key.size() > 5) {
    const std::size_t i = std::stoul(key.substr(5));
    if (i == 0) fail(path, "model", key, "coordinates are 1-based");
    if (m.death_tables.size() < i) m.death_tables.resize(i);
    m.death_tables[i - 1] = parse_piecewise(value);
  } else if (key == "branch_table") m.branch_table = parse_piecewise(value);
  else if (key == "kill_table") m.kill_table = parse_piecewise(value);
  else if (key == "cap") m.cap = parse_m(value) == 0 ? -1 : parse_m(value);
  else if (key == "branch_bound") m.branch_bound = std::stod(value);
  else if (key == "n") m.n = std::stoi(value);
  else if (key == "p_right") m.p_right = std::stod(value);
  else if (key == "s_on") m.s_on = std::stod(value);
  else if (key == "s_off") m.s_off = std::stod(value);
  else if (key == "rate_draw") m.rate_draw = std::stod(value);
  else if (key == "length") m.length = std::stod(value);
  else if (key == "velocities") {
    m.velocities.clear();
    for (const auto& v : split(value, ';')) m.velocities.push_back(std::stod(v));
  } else if (key == "v_min") m.v_min = std::stod(value);
  else if (key == "v_max") m.v_max = std::stod(value);
  else if (key == "alpha") m.alpha = std::stod(value);
  else fail(path, "model", key, "unknown key");
}

void apply_policy(ExperimentConfig& cfg, const std::string& path,
                  const std::string& key, const std::string& value) {
  auto& p = cfg.policy;
  if (key == "kind") {
    if (value == "nmin-nmax") p.kind = PolicyKind::kNminNmax;
    else if (value == "constant") p.kind = PolicyKind::kConstant;
    else if (value == "size-softened") p.kind = PolicyKind::kSizeSoftened;
    else fail(path, "policy", key, "unknown policy kind '" + value + "'");
  } else if (key == "nmin") p.nmin = static_cast<std::uint32_t>(std::stoul(value));
  else if (key == "nmax")
    p.nmax = (value == "inf") ? 0 : static_cast<std::uint32_t>(std::stoul(value));
  else if (key == "p") p.p = std::stod(value);
  else if (key == "q") p.q = std::stod(value);
  else fail(path, "policy", key, "unknown key");
}

void apply_run(ExperimentConfig& cfg, const std::string& path,
               const std::string& key, const std::string& value) {
  auto& r = cfg.run;
  if (key == "horizon") r.horizon = std::stod(value);
  else if (key == "grid_points") r.grid_points = std::stoul(value);
  else if (key == "initial_size")
    r.initial_size = static_cast<std::uint32_t>(std::stoul(value));
  else if (key == "initial_state") r.initial_state = value;
  else if (key == "replicas") r.replicas = std::stoul(value);
  else if (key == "seed") r.seed = std::stoull(value);
  else if (key == "workers") r.workers = std::stoi(value);
  else if (key == "event_cap") r.event_cap = std::stoull(value);
  else if (key == "event_log") r.event_log = value == "true" || value == "1";
  else if (key == "observable") r.observable = value;
  else if (key == "unbounded_ok") r.unbounded_ok = value == "true" || value == "1";
  else fail(path, "run", key, "unknown key");
}

void apply_lambda(ExperimentConfig& cfg, const std::string& path,
                  const std::string& key, const std::string& value) {
  auto& l = cfg.lambda;
  if (key == "horizon") l.horizon = std::stod(value);
  else if (key == "windows") l.windows = std::stoi(value);
  else if (key == "pf_systems") l.pf_systems = std::stoi(value);
  else if (key == "pf_horizon") l.pf_horizon = std::stod(value);
  else if (key == "pf_window") l.pf_window = std::stod(value);
  else if (key == "repeats") l.repeats = std::stoi(value);
  else if (key == "ess_threshold") l.ess_threshold = std::stod(value);
  else fail(path, "lambda", key, "unknown key");
}

void apply_table(ExperimentConfig& cfg, const std::string& path,
                 const std::string& key, const std::string& value) {
  auto& t = cfg.table;
  if (key == "n") t.n = static_cast<std::uint32_t>(std::stoul(value));
  else if (key == "horizon") t.horizon = std::stod(value);
  else if (key == "replicas") t.replicas = std::stoul(value);
  else if (key == "burn_in") t.burn_in = std::stod(value);
  else fail(path, "table", key, "unknown key");
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& err) {
    throw ConfigError(err.filename() + ":" + std::to_string(err.line()) + ": " +
                      err.message());
  }
  ExperimentConfig cfg;
  for (const auto& [section, keys] : tree) {
    for (const auto& [key, node] : keys) {
      const std::string value = trim(node.get_value<std::string>());
      try {
        if (section == "model") apply_model(cfg, path, key, value);
        else if (section == "policy") apply_policy(cfg, path, key, value);
        else if (section == "run") apply_run(cfg, path, key, value);
        else if (section == "lambda") apply_lambda(cfg, path, key, value);
        else if (section == "table") apply_table(cfg, path, key, value);
        else if (section == "output" && key == "dir") cfg.output_dir = value;
        else fail(path, section, key, "unknown section or key");
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& err) {
        fail(path, section, key, std::string("invalid value '") + value +
                                     "': " + err.what());
      }
    }
  }
  return cfg;
}

std::vector<std::string> ExperimentConfig::echo() const {
  std::vector<std::string> out;
  auto add = [&out](const std::string& k, const std::string& v) {
    out.push_back(k + "=" + v);
  };
  const char* preset = "";
  switch (model.preset) {
    case ModelPreset::kBenchmark: preset = "benchmark"; break;
    case ModelPreset::kBenchmarkKilled: preset = "benchmark-killed"; break;
    case ModelPreset::kSingleState: preset = "single-state"; break;
    case ModelPreset::kBirthDeath: preset = "birth-death"; break;
    case ModelPreset::kBrw: preset = "brw"; break;
    case ModelPreset::kBrwPerParticle: preset = "brw-per-particle"; break;
    case ModelPreset::kNrwSlab: preset = "nrw-slab"; break;
  }
  add("model.preset", preset);
  add("model.m", model.m == 0 ? "inf" : std::to_string(model.m));
  switch (policy.kind) {
    case PolicyKind::kNminNmax:
      add("policy.kind", "nmin-nmax");
      add("policy.nmin", std::to_string(policy.nmin));
      add("policy.nmax", policy.nmax == 0 ? "inf" : std::to_string(policy.nmax));
      break;
    case PolicyKind::kConstant:
      add("policy.kind", "constant");
      add("policy.p", std::to_string(policy.p));
      add("policy.q", std::to_string(policy.q));
      break;
    case PolicyKind::kSizeSoftened:
      add("policy.kind", "size-softened");
      break;
  }
  add("run.horizon", std::to_string(run.horizon));
  add("run.grid_points", std::to_string(run.grid_points));
  add("run.initial_size", std::to_string(run.initial_size));
  add("run.initial_state", run.initial_state);
  add("run.replicas", std::to_string(run.replicas));
  add("run.seed", std::to_string(run.seed));
  add("run.observable", run.observable);
  add("run.event_cap", std::to_string(run.event_cap));
  return out;
}

}  // namespace bbmmi
