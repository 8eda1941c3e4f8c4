#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "bbmmi/config.hpp"
#include "bbmmi/errors.hpp"
#include "bbmmi/experiments.hpp"
#include "bbmmi/rng.hpp"
#include "bbmmi/version.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitExplosion = 3;
constexpr int kExitEstimatorUndefined = 4;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> replicas;
  bool unbounded_ok = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "configuration file (INI)");
  cmd->add_option("--seed", args.seed, "master seed (overrides config)");
  cmd->add_option("--workers", args.workers, "worker threads (overrides config)");
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--replicas", args.replicas, "replica count (overrides config)");
  cmd->add_flag("--unbounded-ok", args.unbounded_ok,
                "allow models with an unbounded branch rate");
}

bbmmi::ExperimentConfig resolve(const CommonArgs& args) {
  bbmmi::ExperimentConfig cfg = args.config_path.empty()
                                    ? bbmmi::default_config()
                                    : bbmmi::load_config(args.config_path);
  if (args.seed) cfg.run.seed = *args.seed;
  if (args.workers) cfg.run.workers = *args.workers;
  if (args.out_dir) cfg.output_dir = *args.out_dir;
  if (args.replicas) cfg.run.replicas = *args.replicas;
  if (args.unbounded_ok) cfg.run.unbounded_ok = true;
  // The output directory is the only environment override.
  if (const char* env_dir = std::getenv("BBMMI_OUT"); env_dir && !args.out_dir)
    cfg.output_dir = env_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("bbmmi ") + bbmmi::kVersion +
               " - branching particle systems with Moran interactions"};
  app.require_subcommand(1);

  CommonArgs sim_args, table_args, lambda_args, oracle_args, bench_args;
  std::string table_preset = "table1";

  auto* sim = app.add_subcommand("simulate", "run replicas, write trajectory CSV");
  add_common(sim, sim_args);
  auto* table =
      app.add_subcommand("table", "reproduce the bias/std/event-rate tables");
  add_common(table, table_args);
  table->add_option("--preset", table_preset, "table1 (N=10) or table2 (N=100)");
  auto* lambda = app.add_subcommand("lambda", "compare growth-rate estimators");
  add_common(lambda, lambda_args);
  auto* oracle = app.add_subcommand("oracle", "exact leading triple as CSV");
  add_common(oracle, oracle_args);
  auto* bench = app.add_subcommand("bench", "engine throughput");
  add_common(bench, bench_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) bbmmi::cmd_simulate(resolve(sim_args), std::cout);
    if (table->parsed()) bbmmi::cmd_table(resolve(table_args), table_preset, std::cout);
    if (lambda->parsed()) bbmmi::cmd_lambda(resolve(lambda_args), std::cout);
    if (oracle->parsed()) bbmmi::cmd_oracle(resolve(oracle_args), std::cout);
    if (bench->parsed()) bbmmi::cmd_bench(resolve(bench_args), std::cout);
  } catch (const bbmmi::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const bbmmi::ExplosionGuard& err) {
    std::cerr << "explosion guard tripped: " << err.what() << "\n";
    return kExitExplosion;
  } catch (const bbmmi::EmptySystem& err) {
    std::cerr << "estimator undefined: " << err.what() << "\n";
    return kExitEstimatorUndefined;
  } catch (const bbmmi::AllWeightsZero& err) {
    std::cerr << "estimator undefined: " << err.what() << "\n";
    return kExitEstimatorUndefined;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
