#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bbmmi/estimators.hpp"
#include "bbmmi/models/benchmark_chain.hpp"
#include "bbmmi/models/single_state.hpp"
#include "bbmmi/oracle.hpp"
#include "bbmmi/replica.hpp"

using namespace bbmmi;
using models::BenchmarkChain;
using models::SingleStateModel;

namespace {

double identity_f(const std::int32_t& x) { return static_cast<double>(x); }
double one_f(const std::int32_t&) { return 1.0; }

SnapshotSeries synthetic_series(const std::vector<double>& times,
                                const std::vector<double>& log_pi,
                                double occ0 = 4.0) {
  SnapshotSeries series;
  for (std::size_t i = 0; i < times.size(); ++i) {
    Snapshot s;
    s.time = times[i];
    s.size = 4;
    s.log_pi_b = log_pi[i];
    s.occ_f = 2.0 * occ0;
    s.occ_1 = occ0;
    series.rows.push_back(s);
  }
  return series;
}

}  // namespace

TEST_CASE("many-to-one on the deterministic tilt") {
  SingleStateModel model(0.5, 0.0, 0.0);  // Q_t 1 = e^{0.5 t}
  RunOptions ro;
  ro.horizon = 1.0;
  ro.grid = uniform_grid(1.0, 3);
  auto batch = run_replicas(model, constant_policy<std::int32_t>(0, 0),
                            std::vector<std::int32_t>(5, 0), ro, one_f, 2024, 2000, 4);
  auto est = many_to_one(batch, 1.0);
  const double exact = 5.0 * std::exp(0.5);
  REQUIRE(est.std_error > 0);
  CHECK(std::abs(est.value - exact) < 3 * est.std_error);
}

TEST_CASE("many-to-one against the benchmark oracle") {
  auto model = BenchmarkChain::branching(5);
  RunOptions ro;
  ro.horizon = 1.0;
  ro.grid = uniform_grid(1.0, 5);
  auto batch = run_replicas(model, nmin_nmax_policy<std::int32_t>(2, 6),
                            std::vector<std::int32_t>(3, 2), ro, one_f, 7, 4000, 4);
  auto est = many_to_one(batch, 1.0);

  auto gen = oracle::tilted_generator(model);
  const Eigen::VectorXd qt1 =
      oracle::semigroup_apply(gen.matrix, Eigen::VectorXd::Ones(5), 1.0);
  const double exact = 3.0 * qt1[gen.index_of(2)];
  CHECK(std::abs(est.value - exact) < 3.5 * est.std_error);
}

TEST_CASE("normalized occupation handles the empty system") {
  SnapshotSeries series = synthetic_series({0.0, 1.0}, {0.0, 0.0});
  CHECK(normalized(series, 0.0) == doctest::Approx(2.0));
  series.rows[1].occ_1 = 0;
  series.rows[1].occ_f = 0;
  CHECK(!normalized(series, 1.0).has_value());
  CHECK_THROWS_AS(normalized(series, 0.123), std::invalid_argument);
}

TEST_CASE("lambda_hat is zero without interactions or growth") {
  SingleStateModel model(0.0, 0.0, 0.5);
  RunOptions ro;
  ro.horizon = 2.0;
  ro.grid = uniform_grid(2.0, 3);
  auto traj = run(model, std::vector<std::int32_t>(4, 0),
                  constant_policy<std::int32_t>(0, 0), ro, identity_f,
                  derive_stream(11, 0, "lhat"));
  CHECK(lambda_hat(traj.series, 2.0) == 0.0);
}

TEST_CASE("lambda_hat approaches minus the constant kill rate under FV") {
  SingleStateModel model(0.0, 1.0, 0.0);
  RunOptions ro;
  ro.horizon = 200.0;
  ro.grid = uniform_grid(200.0, 2);
  auto traj = run(model, std::vector<std::int32_t>(100, 0),
                  constant_policy<std::int32_t>(1, 1), ro, identity_f,
                  derive_stream(12, 0, "lhat-fv"));
  CHECK(std::abs(lambda_hat(traj.series, 200.0) - (-1.0)) < 0.05);
}

TEST_CASE("lambda_hat reports emptied systems") {
  SingleStateModel model(0.0, 5.0, 0.0);
  RunOptions ro;
  ro.horizon = 50.0;
  ro.grid = uniform_grid(50.0, 2);
  auto traj = run(model, std::vector<std::int32_t>(2, 0),
                  constant_policy<std::int32_t>(0, 0), ro, identity_f,
                  derive_stream(13, 0, "lhat-empty"));
  CHECK_THROWS_AS(lambda_hat(traj.series, 50.0), EmptySystem);
}

TEST_CASE("lambda_bar collapses equal window ratios") {
  // log Pi grows by log(1.2) per unit window.
  const double step = std::log(1.2);
  SnapshotSeries series =
      synthetic_series({0, 1, 2, 3, 4}, {0, step, 2 * step, 3 * step, 4 * step});
  CHECK(lambda_bar(series, 4.0, 4) == doctest::Approx(step).epsilon(1e-12));

  SnapshotSeries flat = synthetic_series({0, 1, 2, 3, 4}, {0, 0, 0, 0, 0});
  CHECK(lambda_bar(flat, 4.0, 4) == 0.0);
}

TEST_CASE("lambda_bar stays near the oracle on the benchmark") {
  auto model = BenchmarkChain::branching(10);
  RunOptions ro;
  ro.horizon = 2000.0;
  ro.grid = uniform_grid(2000.0, 2001);
  auto traj = run(model, std::vector<std::int32_t>(100, 1),
                  nmin_nmax_policy<std::int32_t>(100, 100), ro, identity_f,
                  derive_stream(14, 0, "lbar"));
  auto gen = oracle::tilted_generator(model);
  const double lambda = oracle::leading_triple(gen.matrix).lambda;
  CHECK(std::abs(lambda_bar(traj.series, 2000.0, 2000) - lambda) < 0.05);
}

TEST_CASE("single-system particle filter telescopes to lambda_hat") {
  SingleStateModel model(0.4, 0.1, 0.0);
  const auto policy = constant_policy<std::int32_t>(1, 1);
  const std::vector<std::int32_t> init(20, 0);

  PfConfig pc;
  pc.horizon = 4.0;
  pc.window = 0.5;
  pc.replica_systems = 1;
  const double pf = pf_lambda(model, policy, init, pc, 555);

  RunOptions ro;
  ro.horizon = 4.0;
  ro.grid = uniform_grid(4.0, 9);  // the window boundaries
  auto traj = run(model, init, policy, ro, identity_f,
                  derive_stream(555, 0, "pf-system"));
  CHECK(pf == doctest::Approx(lambda_hat(traj.series, 4.0)).epsilon(1e-12));
}

TEST_CASE("degenerate equal weights leave the filter at zero") {
  SingleStateModel model(0.0, 0.0, 1.0);
  PfConfig pc;
  pc.horizon = 2.0;
  pc.window = 0.25;
  pc.replica_systems = 8;
  CHECK(pf_lambda(model, constant_policy<std::int32_t>(0, 0),
                  std::vector<std::int32_t>(5, 0), pc, 9) == 0.0);
}

TEST_CASE("never-resampling filter is the product of window means") {
  auto model = BenchmarkChain::branching(6);
  auto policy = nmin_nmax_policy<std::int32_t>(4, 4);
  const std::vector<std::int32_t> init(4, 2);
  PfConfig pc;
  pc.horizon = 2.0;
  pc.window = 0.5;
  pc.replica_systems = 3;
  pc.ess_threshold = 0.0;  // never resample
  const std::uint64_t seed = 31;
  const double pf = pf_lambda(model, policy, init, pc, seed);

  // Identical streams, run independently: W telescopes per window.
  RunOptions ro;
  ro.horizon = 2.0;
  ro.grid = uniform_grid(2.0, 5);
  double log_w = 0;
  std::vector<SnapshotSeries> series;
  for (std::uint64_t i = 0; i < 3; ++i)
    series.push_back(run(model, init, policy, ro, identity_f,
                         derive_stream(seed, i, "pf-system"))
                         .series);
  for (std::size_t w = 0; w + 1 < ro.grid.size(); ++w) {
    double acc = 0;
    for (const auto& s : series) {
      const auto& a = s.rows[w];
      const auto& b = s.rows[w + 1];
      acc += std::exp(b.log_pi_a + b.log_pi_b - a.log_pi_a - a.log_pi_b);
    }
    log_w += std::log(acc / 3.0);
  }
  CHECK(pf == doctest::Approx(log_w / 2.0).epsilon(1e-12));
}

TEST_CASE("filter reports a fully emptied window") {
  SingleStateModel model(0.0, 8.0, 0.0);
  PfConfig pc;
  pc.horizon = 5.0;
  pc.window = 1.0;
  pc.replica_systems = 3;
  CHECK_THROWS_AS(pf_lambda(model, constant_policy<std::int32_t>(0, 0),
                            std::vector<std::int32_t>(1, 0), pc, 77),
                  AllWeightsZero);
}

TEST_CASE("stationary metrics on a frozen system are exact") {
  SingleStateModel model(0.0, 0.0, 0.0);
  RunOptions ro;
  ro.horizon = 10.0;
  ro.grid = uniform_grid(10.0, 11);
  auto batch = run_replicas(model, constant_policy<std::int32_t>(0, 0),
                            std::vector<std::int32_t>(3, 0), ro, identity_f, 1, 10, 1);
  auto report = stationary_metrics(batch, 0.0, 0.2);
  CHECK(report.bias == 0.0);
  CHECK(report.std_dev == 0.0);
  CHECK(report.event_rate == 0.0);
  CHECK(report.replicas == 10);
}

TEST_CASE("stationary metrics approach the benchmark oracle loosely") {
  auto model = BenchmarkChain::branching(10);
  RunOptions ro;
  ro.horizon = 50.0;
  ro.grid = uniform_grid(50.0, 101);
  auto batch = run_replicas(model, nmin_nmax_policy<std::int32_t>(10, 10),
                            std::vector<std::int32_t>(10, 1), ro, identity_f, 3,
                            50, 4);
  auto gen = oracle::tilted_generator(model);
  auto triple = oracle::leading_triple(gen.matrix);
  const Eigen::VectorXd f = gen.observable(
      [](const BenchmarkChain::State& x) { return static_cast<double>(x); });
  auto report = stationary_metrics(batch, triple.nu.dot(f), 0.2);
  CHECK(report.bias < 0.3);
  CHECK(report.event_rate > 5.0);
  CHECK(report.event_rate < 30.0);
}

TEST_CASE("lambda_bar is stable under grid refinement") {
  auto model = BenchmarkChain::branching(10);
  RunOptions ro;
  ro.horizon = 2000.0;
  ro.grid = uniform_grid(2000.0, 4001);  // spacing 0.5 covers both windowings
  std::vector<double> coarse, fine;
  for (std::uint64_t r = 0; r < 6; ++r) {
    auto traj = run(model, std::vector<std::int32_t>(100, 1),
                    nmin_nmax_policy<std::int32_t>(100, 100), ro, identity_f,
                    derive_stream(400, r, "lbar-refine"));
    coarse.push_back(lambda_bar(traj.series, 2000.0, 2000));
    fine.push_back(lambda_bar(traj.series, 2000.0, 4000));
  }
  // The estimator comes from one trajectory, so its standard error is the
  // spread across replica trajectories; halving the window must move it by
  // less than that.
  const double mean_coarse = pairwise_mean(coarse);
  const double mean_fine = pairwise_mean(fine);
  double var = 0;
  for (double v : coarse) var += (v - mean_coarse) * (v - mean_coarse);
  const double replica_std = std::sqrt(var / (coarse.size() - 1));
  CHECK(std::abs(mean_fine - mean_coarse) < replica_std);
}

TEST_CASE("many-to-one confidence intervals cover the oracle on a grid") {
  auto model = BenchmarkChain::branching(3);
  RunOptions ro;
  ro.horizon = 1.0;
  ro.grid = uniform_grid(1.0, 5);
  auto batch = run_replicas(model, nmin_nmax_policy<std::int32_t>(2, 5),
                            std::vector<std::int32_t>(3, 1), ro, one_f, 81,
                            10000, 4);
  auto gen = oracle::tilted_generator(model);
  for (double t : {0.25, 0.5, 0.75, 1.0}) {
    const Eigen::VectorXd qt1 =
        oracle::semigroup_apply(gen.matrix, Eigen::VectorXd::Ones(3), t);
    const double exact = 3.0 * qt1[gen.index_of(1)];
    const auto est = many_to_one(batch, t);
    CHECK(std::abs(est.value - exact) <= 2.58 * est.std_error);
  }
}

TEST_CASE("pairwise sum matches a long-double reference") {
  RngStream rng(55, 0, "pairwise");
  std::vector<double> values;
  for (int i = 0; i < 10'001; ++i) values.push_back(rng.uniform01() - 0.5);
  long double reference = 0;
  for (double v : values) reference += static_cast<long double>(v);
  CHECK(pairwise_sum(values) ==
        doctest::Approx(static_cast<double>(reference)).epsilon(1e-12));
}
