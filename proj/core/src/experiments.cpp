#include "bbmmi/experiments.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "bbmmi/csv.hpp"
#include "bbmmi/estimators.hpp"
#include "bbmmi/models/benchmark_chain.hpp"
#include "bbmmi/models/birth_death.hpp"
#include "bbmmi/models/branching_random_walk.hpp"
#include "bbmmi/models/neutron_slab.hpp"
#include "bbmmi/models/single_state.hpp"
#include "bbmmi/oracle.hpp"
#include "bbmmi/replica.hpp"
#include "bbmmi/version.hpp"

namespace bbmmi {

namespace {

namespace fs = std::filesystem;

template <class State>
InteractionPolicy<State> make_policy(const PolicyConfig& pc) {
  switch (pc.kind) {
    case PolicyKind::kNminNmax:
      return nmin_nmax_policy<State>(pc.nmin, pc.nmax == 0 ? kNoSizeBound : pc.nmax);
    case PolicyKind::kConstant:
      return constant_policy<State>(pc.p, pc.q);
    case PolicyKind::kSizeSoftened:
      return size_softened_policy<State>();
  }
  throw ConfigError("unknown policy kind");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

models::BirthDeathModel build_birth_death(const ModelConfig& mc) {
  models::BirthDeathModel::Spec spec;
  spec.dimension = mc.dimension;
  if (mc.birth_tables.size() != static_cast<std::size_t>(mc.dimension) ||
      mc.death_tables.size() != static_cast<std::size_t>(mc.dimension))
    throw ConfigError("birth-death model needs one birth/death table per coordinate");
  spec.birth = [tables = mc.birth_tables](const models::BirthDeathModel::State& x,
                                          int i) {
    return tables[static_cast<std::size_t>(i)](x[static_cast<std::size_t>(i)]);
  };
  spec.death = [tables = mc.death_tables](const models::BirthDeathModel::State& x,
                                          int i) {
    return tables[static_cast<std::size_t>(i)](x[static_cast<std::size_t>(i)]);
  };
  auto coordinate_sum = [](const models::BirthDeathModel::State& x) {
    std::int64_t sum = 0;
    for (auto v : x) sum += v;
    return sum;
  };
  if (!mc.branch_table.pieces.empty() || mc.branch_table.fallback)
    spec.branch = [t = mc.branch_table, coordinate_sum](const auto& x) {
      return t(coordinate_sum(x));
    };
  if (!mc.kill_table.pieces.empty() || mc.kill_table.fallback)
    spec.kill = [t = mc.kill_table, coordinate_sum](const auto& x) {
      return t(coordinate_sum(x));
    };
  spec.cap = mc.cap;
  spec.branch_bound = mc.branch_bound;
  return models::BirthDeathModel(std::move(spec));
}

models::NrwSlabModel build_nrw(const ModelConfig& mc) {
  models::NrwSlabSpec spec;
  spec.length = mc.length;
  spec.velocities = mc.velocities;
  spec.v_min = mc.v_min;
  spec.v_max = mc.v_max;
  spec.alpha = [a = mc.alpha](double, double) { return a; };
  spec.alpha_sup = mc.alpha;
  const std::size_t n = spec.velocities.size();
  spec.scatter.assign(n, std::vector<double>(n, 1.0 / static_cast<double>(n)));
  return models::NrwSlabModel(std::move(spec));
}

template <class State>
std::function<double(const State&)> scalar_observable(
    const std::string& name, const std::function<double(const State&)>& identity) {
  if (name == "one") return [](const State&) { return 1.0; };
  if (name == "identity") return identity;
  if (name.rfind("indicator:", 0) == 0) {
    const double k = std::stod(name.substr(10));
    return [identity, k](const State& x) { return identity(x) == k ? 1.0 : 0.0; };
  }
  throw ConfigError("unknown observable '" + name + "'");
}

/// Instantiate the configured model and hand (model, initial states,
/// observable) to the continuation.
template <class Fn>
auto with_model(const ExperimentConfig& cfg, Fn&& fn) {
  const auto& mc = cfg.model;
  const auto& rc = cfg.run;
  switch (mc.preset) {
    case ModelPreset::kBenchmark: {
      if (mc.m == models::BenchmarkChain::kUnbounded && !rc.unbounded_ok)
        throw ConfigError(
            "unbounded branch rate (m = inf) requires unbounded_ok / --unbounded-ok");
      auto model = models::BenchmarkChain::branching(mc.m);
      using State = models::BenchmarkChain::State;
      const State x0 = static_cast<State>(std::stol(rc.initial_state));
      std::vector<State> init(rc.initial_size, x0);
      auto f = scalar_observable<State>(
          rc.observable, [](const State& x) { return static_cast<double>(x); });
      return fn(model, init, f);
    }
    case ModelPreset::kBenchmarkKilled: {
      auto model = models::BenchmarkChain::killed(mc.m);
      using State = models::BenchmarkChain::State;
      const State x0 = static_cast<State>(std::stol(rc.initial_state));
      std::vector<State> init(rc.initial_size, x0);
      auto f = scalar_observable<State>(
          rc.observable, [](const State& x) { return static_cast<double>(x); });
      return fn(model, init, f);
    }
    case ModelPreset::kSingleState: {
      models::SingleStateModel model(mc.branch, mc.kill, mc.motion);
      using State = models::SingleStateModel::State;
      std::vector<State> init(rc.initial_size, 0);
      auto f = scalar_observable<State>(
          rc.observable, [](const State& x) { return static_cast<double>(x); });
      return fn(model, init, f);
    }
    case ModelPreset::kBirthDeath: {
      auto model = build_birth_death(mc);
      using State = models::BirthDeathModel::State;
      State x0;
      for (const auto& part : split_list(rc.initial_state))
        x0.push_back(static_cast<std::int32_t>(std::stol(part)));
      if (x0.size() != static_cast<std::size_t>(mc.dimension))
        throw ConfigError("initial_state needs one coordinate per dimension");
      std::vector<State> init(rc.initial_size, x0);
      auto f = scalar_observable<State>(rc.observable, [](const State& x) {
        double sum = 0;
        for (auto v : x) sum += v;
        return sum;
      });
      if (rc.observable.rfind("coordinate:", 0) == 0) {
        const std::size_t i = std::stoul(rc.observable.substr(11));
        f = [i](const State& x) { return static_cast<double>(x.at(i - 1)); };
      }
      return fn(model, init, f);
    }
    case ModelPreset::kBrw: {
      models::BrwSpec spec;
      spec.n = mc.n;
      spec.p_right = mc.p_right;
      spec.s_on = mc.s_on;
      spec.s_off = mc.s_off;
      spec.rate_draw = mc.rate_draw;
      models::BrwSharedEnvModel model(spec);
      using State = models::BrwSharedEnvModel::State;
      const State x0 = static_cast<State>(std::stol(rc.initial_state));
      std::vector<State> init(rc.initial_size, x0);
      auto f = scalar_observable<State>(
          rc.observable, [](const State& x) { return static_cast<double>(x); });
      return fn(model, init, f);
    }
    case ModelPreset::kBrwPerParticle: {
      models::BrwSpec spec;
      spec.n = mc.n;
      spec.p_right = mc.p_right;
      spec.s_on = mc.s_on;
      spec.s_off = mc.s_off;
      spec.rate_draw = mc.rate_draw;
      models::BrwPerParticleModel model(spec);
      using State = models::BrwPerParticleModel::State;
      const auto site = static_cast<std::int32_t>(std::stol(rc.initial_state));
      std::vector<State> init(rc.initial_size, State{site, false, 0.0});
      auto f = scalar_observable<State>(
          rc.observable, [](const State& x) { return static_cast<double>(x.site); });
      return fn(model, init, f);
    }
    case ModelPreset::kNrwSlab: {
      auto model = build_nrw(mc);
      using State = models::NrwSlabModel::State;
      const auto parts = split_list(rc.initial_state);
      if (parts.size() != 2)
        throw ConfigError("nrw initial_state must be 'r,velocity_index'");
      const State x0{std::stod(parts[0]),
                     static_cast<std::int32_t>(std::stol(parts[1]))};
      if (model.is_absorbed(x0)) throw ConfigError("nrw initial state is absorbed");
      std::vector<State> init(rc.initial_size, x0);
      auto f = scalar_observable<State>(rc.observable,
                                        [](const State& x) { return x.r; });
      return fn(model, init, f);
    }
  }
  throw ConfigError("unknown model preset");
}

CsvMetadata metadata_for(const ExperimentConfig& cfg, const ReplicaBatch* batch) {
  CsvMetadata meta;
  meta.seed = cfg.run.seed;
  meta.config_echo = cfg.echo();
  if (batch) {
    std::string flagged;
    for (std::size_t r = 0; r < batch->replicas.size(); ++r)
      if (batch->replicas[r].hard_kill_tie)
        flagged += (flagged.empty() ? "" : ",") + std::to_string(r);
    meta.replica_status = flagged.empty() ? "ok" : "tie-flagged:" + flagged;
  }
  return meta;
}

fs::path output_file(const ExperimentConfig& cfg, const std::string& name) {
  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir / name;
}

nlohmann::json base_summary(const ExperimentConfig& cfg, const std::string& command) {
  nlohmann::json j;
  j["tool"] = "bbmmi";
  j["version"] = kVersion;
  j["rng"] = RngStream::kAlgorithm;
  j["command"] = command;
  j["seed"] = cfg.run.seed;
  j["config"] = cfg.echo();
  return j;
}

void write_summary(const ExperimentConfig& cfg, const nlohmann::json& summary) {
  std::ofstream os(output_file(cfg, "summary.json"));
  os << summary.dump(2) << "\n";
}

double oracle_nu_f_benchmark(int m) {
  auto chain = models::BenchmarkChain::branching(m);
  auto gen = oracle::tilted_generator(chain);
  auto triple = oracle::leading_triple(gen.matrix);
  const Eigen::VectorXd f =
      gen.observable([](const models::BenchmarkChain::State& x) {
        return static_cast<double>(x);
      });
  return triple.nu.dot(f);
}

struct TableRow {
  std::string m_label;
  std::string algorithm;
  bool defined = true;
  MetricReport report;
  double nu_f = 0;
};

TableRow table_row(const ExperimentConfig& cfg, int m, bool fleming_viot,
                   std::uint32_t n, double nu_f, std::uint64_t row_seed,
                   std::ostream& diag) {
  TableRow row;
  row.m_label = m == 0 ? "inf" : std::to_string(m);
  row.algorithm = fleming_viot ? "fv" : "nmin-nmax";
  row.nu_f = nu_f;
  if (fleming_viot && m == 0) {
    row.defined = false;  // the FV process needs a finite branch-rate bound
    return row;
  }
  using State = models::BenchmarkChain::State;
  auto model = fleming_viot ? models::BenchmarkChain::killed(m)
                            : models::BenchmarkChain::branching(m);
  auto policy = nmin_nmax_policy<State>(n, n);
  RunOptions ro;
  ro.horizon = cfg.table.horizon;
  ro.grid = uniform_grid(ro.horizon,
                         static_cast<std::size_t>(2 * cfg.table.horizon) + 1);
  ro.event_cap = cfg.run.event_cap;
  std::vector<State> init(n, 1);
  auto f = [](const State& x) { return static_cast<double>(x); };
  auto batch = run_replicas(model, policy, init, ro, f, row_seed,
                            cfg.table.replicas, cfg.run.workers);
  row.report = stationary_metrics(batch, nu_f, cfg.table.burn_in);
  diag << "  " << row.algorithm << " M=" << row.m_label << " N=" << n
       << ": bias=" << row.report.bias << " std=" << row.report.std_dev
       << " events/t=" << row.report.event_rate << "\n";
  return row;
}

}  // namespace

std::string cmd_simulate(const ExperimentConfig& cfg, std::ostream& diag) {
  return with_model(cfg, [&](const auto& model, const auto& init, const auto& f) {
    RunOptions ro;
    ro.horizon = cfg.run.horizon;
    ro.grid = uniform_grid(cfg.run.horizon, cfg.run.grid_points);
    ro.event_cap = cfg.run.event_cap;
    ro.record_events = cfg.run.event_log;
    std::vector<std::vector<EventRecord>> logs;
    auto batch = run_replicas(model, make_policy<typename std::decay_t<
                                  decltype(model)>::State>(cfg.policy),
                              init, ro, f, cfg.run.seed, cfg.run.replicas,
                              cfg.run.workers, cfg.run.event_log ? &logs : nullptr);
    const auto meta = metadata_for(cfg, &batch);
    const auto path = output_file(cfg, "simulate.csv");
    std::ofstream os(path);
    write_trajectory_csv(os, batch, meta);
    if (cfg.run.event_log) {
      std::ofstream es(output_file(cfg, "events.csv"));
      write_event_log(es, logs, meta);
    }
    nlohmann::json summary = base_summary(cfg, "simulate");
    summary["replicas"] = cfg.run.replicas;
    summary["trajectory_csv"] = path.string();
    summary["replica_status"] = meta.replica_status;
    {
      auto final_est = many_to_one(batch, batch.grid.back());
      summary["many_to_one"] = {{"t", batch.grid.back()},
                                {"value", final_est.value},
                                {"stderr", final_est.std_error}};
    }
    write_summary(cfg, summary);
    diag << "wrote " << path.string() << " (" << cfg.run.replicas << " replicas)\n";
    return path.string();
  });
}

std::string cmd_table(const ExperimentConfig& cfg, const std::string& preset,
                      std::ostream& diag) {
  if (preset != "table1" && preset != "table2")
    throw ConfigError("table preset must be 'table1' or 'table2'");
  ExperimentConfig local = cfg;
  const std::uint32_t n =
      cfg.table.n != 0 ? cfg.table.n : (preset == "table2" ? 100u : 10u);
  // The M = inf column of the sweep is part of the published experiment;
  // the explicit opt-in flag still guards ad-hoc unbounded runs.
  local.run.unbounded_ok = true;

  std::vector<int> caps = {10, 100, 1000, 0};
  std::map<int, double> nu;
  for (int m : caps)
    nu[m] = oracle_nu_f_benchmark(m == 0 ? 1000 : m);  // nu_1000 stands in at inf

  const auto path = output_file(cfg, preset + ".csv");
  std::ofstream os(path);
  auto meta = metadata_for(cfg, nullptr);
  meta.extra_comments.push_back(
      "columns bias/std/event_rate follow the stationary-metrics report");
  meta.extra_comments.push_back("oracle nu_f at M=inf uses the M=1000 triple");
  write_csv_header(os, meta);
  os << "table,M,algorithm,N,bias,std,event_rate,mean,mean_stderr,nu_f,replicas,"
        "horizon\n";
  nlohmann::json summary = base_summary(cfg, preset);
  summary["rows"] = nlohmann::json::array();
  std::uint64_t row_index = 0;
  for (int m : caps) {
    for (bool fv : {false, true}) {
      const std::uint64_t row_seed =
          derive_stream(cfg.run.seed, row_index++, "table-row")();
      TableRow row = table_row(local, m, fv, n, nu[m], row_seed, diag);
      nlohmann::json jrow = {{"M", row.m_label},   {"algorithm", row.algorithm},
                             {"N", n},             {"nu_f", row.nu_f},
                             {"defined", row.defined}};
      if (row.defined) {
        jrow["bias"] = row.report.bias;
        jrow["std"] = row.report.std_dev;
        jrow["event_rate"] = row.report.event_rate;
        jrow["mean"] = row.report.mean;
        jrow["mean_stderr"] = row.report.mean_std_error;
      }
      summary["rows"].push_back(jrow);
      os << preset << ',' << row.m_label << ',' << row.algorithm << ',' << n << ',';
      if (!row.defined) {
        os << "*,*,*,*,*," << format_double(row.nu_f) << ',' << cfg.table.replicas
           << ',' << format_double(cfg.table.horizon) << "\n";
        continue;
      }
      os << format_double(row.report.bias) << ',' << format_double(row.report.std_dev)
         << ',' << format_double(row.report.event_rate) << ','
         << format_double(row.report.mean) << ','
         << format_double(row.report.mean_std_error) << ','
         << format_double(row.nu_f) << ',' << cfg.table.replicas << ','
         << format_double(cfg.table.horizon) << "\n";
    }
  }
  write_summary(cfg, summary);
  diag << "wrote " << path.string() << "\n";
  return path.string();
}

std::string cmd_lambda(const ExperimentConfig& cfg, std::ostream& diag) {
  struct Row {
    std::string estimator;
    std::vector<double> values;
    double wall_ms = 0;
    std::uint64_t events = 0;
  };
  std::optional<double> oracle_lambda;
  if (cfg.model.preset == ModelPreset::kBenchmark && cfg.model.m != 0) {
    auto gen = oracle::tilted_generator(models::BenchmarkChain::branching(cfg.model.m));
    oracle_lambda = oracle::leading_triple(gen.matrix).lambda;
  } else if (cfg.model.preset == ModelPreset::kBenchmarkKilled) {
    auto gen = oracle::tilted_generator(models::BenchmarkChain::killed(cfg.model.m));
    oracle_lambda = oracle::leading_triple(gen.matrix).lambda;
  } else if (cfg.model.preset == ModelPreset::kSingleState) {
    oracle_lambda = cfg.model.branch - cfg.model.kill;
  }

  Row hat{"lambda_hat", {}, 0, 0}, bar{"lambda_bar", {}, 0, 0},
      pf{"pf_lambda", {}, 0, 0};
  with_model(cfg, [&](const auto& model, const auto& init, const auto& f) {
    using State = typename std::decay_t<decltype(model)>::State;
    auto policy = make_policy<State>(cfg.policy);
    for (int rep = 0; rep < cfg.lambda.repeats; ++rep) {
      RunOptions ro;
      ro.horizon = cfg.lambda.horizon;
      ro.grid = uniform_grid(cfg.lambda.horizon,
                             static_cast<std::size_t>(cfg.lambda.windows) + 1);
      ro.event_cap = cfg.run.event_cap;
      const auto t0 = std::chrono::steady_clock::now();
      auto traj = run(model, init, policy, ro, f,
                      derive_stream(cfg.run.seed, static_cast<std::uint64_t>(rep),
                                    "lambda-traj"));
      const auto t1 = std::chrono::steady_clock::now();
      hat.values.push_back(lambda_hat(traj.series, cfg.lambda.horizon));
      hat.wall_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
      hat.events += traj.final_state.count_events;
      bar.values.push_back(
          lambda_bar(traj.series, cfg.lambda.horizon, cfg.lambda.windows));
      bar.wall_ms = hat.wall_ms;
      bar.events = hat.events;

      PfConfig pc;
      pc.horizon = cfg.lambda.pf_horizon;
      pc.window = cfg.lambda.pf_window;
      pc.replica_systems = cfg.lambda.pf_systems;
      pc.ess_threshold = cfg.lambda.ess_threshold;
      pc.event_cap = cfg.run.event_cap;
      const std::uint64_t pf_seed =
          derive_stream(cfg.run.seed, static_cast<std::uint64_t>(rep), "pf-seed")();
      PfStats pf_stats;
      const auto t2 = std::chrono::steady_clock::now();
      pf.values.push_back(
          pf_lambda(model, policy, init, pc, pf_seed, cfg.run.workers, &pf_stats));
      const auto t3 = std::chrono::steady_clock::now();
      pf.wall_ms += std::chrono::duration<double, std::milli>(t3 - t2).count();
      pf.events += pf_stats.events;
    }
    return 0;
  });

  const auto path = output_file(cfg, "lambda.csv");
  std::ofstream os(path);
  auto meta = metadata_for(cfg, nullptr);
  if (!oracle_lambda)
    meta.extra_comments.push_back("no finite-state oracle: property-based only");
  write_csv_header(os, meta);
  os << "estimator,value,stderr,wall_ms,events,oracle_lambda,oracle_note\n";
  auto emit = [&](const Row& row) {
    const double mean = pairwise_mean(row.values);
    double se = 0;
    if (row.values.size() > 1) {
      double acc = 0;
      for (double v : row.values) acc += (v - mean) * (v - mean);
      se = std::sqrt(acc / (row.values.size() - 1) /
                     static_cast<double>(row.values.size()));
    }
    os << row.estimator << ',' << format_double(mean) << ',' << format_double(se)
       << ',' << format_double(row.wall_ms) << ',' << row.events << ',';
    if (oracle_lambda)
      os << format_double(*oracle_lambda) << ",exact\n";
    else
      os << "*,property-based only\n";
  };
  emit(hat);
  emit(bar);
  emit(pf);
  nlohmann::json summary = base_summary(cfg, "lambda");
  summary["estimators"] = nlohmann::json::array();
  for (const Row* row : {&hat, &bar, &pf}) {
    nlohmann::json jrow = {{"estimator", row->estimator},
                           {"value", pairwise_mean(row->values)},
                           {"repeats", row->values.size()},
                           {"wall_ms", row->wall_ms}};
    summary["estimators"].push_back(jrow);
  }
  if (oracle_lambda)
    summary["oracle_lambda"] = *oracle_lambda;
  else
    summary["oracle_lambda"] = nullptr;
  write_summary(cfg, summary);
  diag << "wrote " << path.string() << "\n";
  return path.string();
}

std::string cmd_oracle(const ExperimentConfig& cfg, std::ostream& diag) {
  oracle::EnumeratedGenerator<models::BenchmarkChain::State> gen;
  switch (cfg.model.preset) {
    case ModelPreset::kBenchmark:
      if (cfg.model.m == 0) throw ConfigError("oracle needs a finite state space");
      gen = oracle::tilted_generator(models::BenchmarkChain::branching(cfg.model.m));
      break;
    case ModelPreset::kBenchmarkKilled:
      gen = oracle::tilted_generator(models::BenchmarkChain::killed(cfg.model.m));
      break;
    default:
      throw ConfigError("oracle output is available for the benchmark presets only");
  }
  auto triple = oracle::leading_triple(gen.matrix);
  const Eigen::VectorXd f = gen.observable(
      [](const models::BenchmarkChain::State& x) { return static_cast<double>(x); });

  const auto path = output_file(cfg, "oracle.csv");
  std::ofstream os(path);
  auto meta = metadata_for(cfg, nullptr);
  meta.extra_comments.push_back("lambda " + format_double(triple.lambda));
  meta.extra_comments.push_back("nu_f " + format_double(triple.nu.dot(f)));
  write_csv_header(os, meta);
  os << "state,eta,nu\n";
  for (Eigen::Index i = 0; i < triple.eta.size(); ++i)
    os << gen.states[static_cast<std::size_t>(i)] << ','
       << format_double(triple.eta[i]) << ',' << format_double(triple.nu[i]) << "\n";
  diag << "lambda=" << format_double(triple.lambda)
       << " nu_f=" << format_double(triple.nu.dot(f)) << " -> " << path.string()
       << "\n";
  return path.string();
}

std::string cmd_bench(const ExperimentConfig& cfg, std::ostream& diag) {
  struct Case {
    const char* name;
    bool fv;
    std::uint32_t n;
  };
  const Case cases[] = {{"nminmax-n10", false, 10},
                        {"fv-n10", true, 10},
                        {"nminmax-n100", false, 100}};
  const auto path = output_file(cfg, "bench.csv");
  std::ofstream os(path);
  write_csv_header(os, metadata_for(cfg, nullptr));
  os << "case,events,seconds,events_per_sec\n";
  using State = models::BenchmarkChain::State;
  for (const auto& c : cases) {
    auto model = c.fv ? models::BenchmarkChain::killed(10)
                      : models::BenchmarkChain::branching(10);
    System<models::BenchmarkChain> system(
        model, nmin_nmax_policy<State>(c.n, c.n), std::vector<State>(c.n, 1),
        derive_stream(cfg.run.seed, 0, "bench"), EngineOptions{cfg.run.event_cap});
    const auto t0 = std::chrono::steady_clock::now();
    system.advance_to(c.fv ? 50.0 : 200.0);
    const auto t1 = std::chrono::steady_clock::now();
    const double seconds = std::chrono::duration<double>(t1 - t0).count();
    const auto events = system.state().count_events;
    os << c.name << ',' << events << ',' << format_double(seconds) << ','
       << format_double(static_cast<double>(events) / seconds) << "\n";
    diag << c.name << ": " << static_cast<double>(events) / seconds
         << " events/s\n";
  }
  return path.string();
}

}  // namespace bbmmi
