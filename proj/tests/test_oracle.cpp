#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bbmmi/models/benchmark_chain.hpp"
#include "bbmmi/models/birth_death.hpp"
#include "bbmmi/models/single_state.hpp"
#include "bbmmi/oracle.hpp"

using namespace bbmmi;
using models::BenchmarkChain;
using models::BirthDeathModel;
using models::SingleStateModel;

namespace {

Eigen::VectorXd ones(Eigen::Index n) { return Eigen::VectorXd::Ones(n); }

Eigen::MatrixXd benchmark_matrix(int m) {
  return oracle::tilted_generator(BenchmarkChain::branching(m)).matrix;
}

}  // namespace

TEST_CASE("single state generator and scalar exponential") {
  SingleStateModel model(1.5, 0.5, 0.0);  // b - k = 1
  auto gen = oracle::tilted_generator(model);
  REQUIRE(gen.matrix.rows() == 1);
  CHECK(gen.matrix(0, 0) == doctest::Approx(1.0));
  const auto out = oracle::semigroup_apply(gen.matrix, ones(1), 2.0);
  CHECK(std::abs(out[0] - std::exp(2.0)) < 1e-12 * std::exp(2.0));

  auto triple = oracle::leading_triple(gen.matrix);
  CHECK(triple.lambda == doctest::Approx(1.0));
  CHECK(triple.eta[0] == doctest::Approx(1.0));
  CHECK(triple.nu[0] == doctest::Approx(1.0));
}

TEST_CASE("hand-assembled two-state benchmark generator") {
  // From 1: jump rate 1, half of it reflects (self-loop, cancels), b = 1.
  // From 2: jump rate 4, 2/3 to state 1, 1/3 self-caps, b = 2.
  auto gen = oracle::tilted_generator(BenchmarkChain::branching(2));
  REQUIRE(gen.matrix.rows() == 2);
  CHECK(gen.matrix(0, 0) == doctest::Approx(-0.5 + 1.0));
  CHECK(gen.matrix(0, 1) == doctest::Approx(0.5));
  CHECK(gen.matrix(1, 0) == doctest::Approx(8.0 / 3.0));
  CHECK(gen.matrix(1, 1) == doctest::Approx(-8.0 / 3.0 + 2.0));
}

TEST_CASE("conservative tilt has zero row sums") {
  // b == kappa makes the tilted generator conservative on the interior.
  BirthDeathModel::Spec spec;
  spec.dimension = 1;
  spec.cap = 6;
  spec.birth = [](const BirthDeathModel::State&, int) { return 1.0; };
  spec.death = [](const BirthDeathModel::State& x, int) {
    return x[0] > 0 ? 2.0 : 0.0;
  };
  spec.branch = [](const BirthDeathModel::State& x) { return 0.5 + x[0]; };
  spec.kill = [](const BirthDeathModel::State& x) { return 0.5 + x[0]; };
  BirthDeathModel model(spec);
  auto gen = oracle::tilted_generator(model);
  for (Eigen::Index i = 0; i < gen.matrix.rows(); ++i)
    CHECK(gen.matrix.row(i).sum() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("semigroup at t = 0 is the identity") {
  auto a = benchmark_matrix(5);
  Eigen::VectorXd f(5);
  f << 1, -2, 3, 0.5, 4;
  CHECK((oracle::semigroup_apply(a, f, 0.0) - f).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(oracle::semigroup_apply(a, f, -1.0), std::invalid_argument);
}

TEST_CASE("uniformization matches a direct Taylor series") {
  auto a = benchmark_matrix(3);
  Eigen::VectorXd f = ones(3);
  const double t = 0.5;
  Eigen::VectorXd taylor = f;
  Eigen::VectorXd term = f;
  for (int k = 1; k <= 60; ++k) {
    term = (a * term) * (t / k);
    taylor += term;
  }
  const auto uni = oracle::semigroup_apply(a, f, t);
  CHECK((uni - taylor).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("semigroup property composes") {
  auto a = benchmark_matrix(10);
  Eigen::VectorXd f = ones(10);
  const auto two_step =
      oracle::semigroup_apply(a, oracle::semigroup_apply(a, f, 0.3), 0.7);
  const auto one_step = oracle::semigroup_apply(a, f, 1.0);
  CHECK((two_step - one_step).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("leading triple satisfies the eigen identities") {
  auto a = benchmark_matrix(10);
  auto triple = oracle::leading_triple(a, oracle::EigenMethod::kPowerIteration);
  const auto [right, left] = oracle::eigen_residuals(a, triple);
  CHECK(right <= 1e-10);
  CHECK(left <= 1e-10);
  CHECK(triple.eta.minCoeff() > 0.0);
  CHECK(triple.eta.maxCoeff() == doctest::Approx(1.0));
  CHECK(triple.nu.minCoeff() >= 0.0);
  CHECK(triple.nu.sum() == doctest::Approx(1.0));

  // e^{At} eta = e^{lambda t} eta
  const auto evolved = oracle::semigroup_apply(a, triple.eta, 1.0);
  const Eigen::VectorXd scaled = std::exp(triple.lambda) * triple.eta;
  CHECK((evolved - scaled).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("symmetric two-state chain has lambda 0 and uniform nu") {
  Eigen::MatrixXd a(2, 2);
  a << -1, 1, 1, -1;
  auto triple = oracle::leading_triple(a);
  CHECK(triple.lambda == doctest::Approx(0.0));
  CHECK(triple.nu[0] == doctest::Approx(0.5));
  CHECK(triple.nu[1] == doctest::Approx(0.5));
}

TEST_CASE("three eigen methods agree on the benchmark") {
  auto a = benchmark_matrix(10);
  auto power = oracle::leading_triple(a, oracle::EigenMethod::kPowerIteration);
  auto tri = oracle::leading_triple(a, oracle::EigenMethod::kTridiagonal);
  auto dense = oracle::leading_triple(a, oracle::EigenMethod::kDense);
  CHECK(power.lambda == doctest::Approx(tri.lambda).epsilon(1e-9));
  CHECK(power.lambda == doctest::Approx(dense.lambda).epsilon(1e-9));
  CHECK((power.eta - tri.eta).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((power.nu - tri.nu).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((power.eta - dense.eta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("benchmark growth rate equals the stationary mean of b") {
  // The benchmark tilt is diag(b) with b(x) = x and a conservative motion
  // part, so lambda = nu(b) = nu(f) exactly.
  for (int m : {5, 10, 100}) {
    auto gen = oracle::tilted_generator(BenchmarkChain::branching(m));
    auto triple = oracle::leading_triple(gen.matrix);
    const Eigen::VectorXd f = gen.observable(
        [](const BenchmarkChain::State& x) { return static_cast<double>(x); });
    CHECK(triple.lambda == doctest::Approx(triple.nu.dot(f)).epsilon(1e-9));
  }
}

TEST_CASE("pinned regression constants for the M = 10 benchmark") {
  auto gen = oracle::tilted_generator(BenchmarkChain::branching(10));
  auto triple = oracle::leading_triple(gen.matrix);
  const Eigen::VectorXd f = gen.observable(
      [](const BenchmarkChain::State& x) { return static_cast<double>(x); });
  // Frozen from this oracle, cross-checked against the dense and the
  // symmetrised tridiagonal eigensolvers (all agree to 1e-13).
  CHECK(triple.lambda == doctest::Approx(1.4526171629222506).epsilon(1e-9));
  CHECK(triple.nu.dot(f) == doctest::Approx(1.4526171629222506).epsilon(1e-9));
}

TEST_CASE("killed chain is the benchmark tilted down by M") {
  const int m = 5;
  auto branching = oracle::tilted_generator(BenchmarkChain::branching(m));
  auto killed = oracle::tilted_generator(BenchmarkChain::killed(m));
  const Eigen::MatrixXd shift =
      branching.matrix - m * Eigen::MatrixXd::Identity(m, m);
  CHECK((killed.matrix - shift).cwiseAbs().maxCoeff() == 0.0);

  // psi^k_t = e^{-Mt} psi_t, checked through the exponentials.
  const double t = 0.3;
  const Eigen::VectorXd direct = oracle::semigroup_apply(killed.matrix, ones(m), t);
  const Eigen::VectorXd psi = oracle::semigroup_apply(branching.matrix, ones(m), t);
  const Eigen::VectorXd tilted = std::exp(-static_cast<double>(m) * t) * psi;
  CHECK((direct - tilted).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("normalized semigroup converges to nu in total variation") {
  auto gen = oracle::tilted_generator(BenchmarkChain::branching(10));
  auto triple = oracle::leading_triple(gen.matrix);
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(10);
  delta[gen.index_of(2)] = 1.0;
  const Eigen::VectorXd mu = oracle::semigroup_apply_left(gen.matrix, delta, 20.0);
  const Eigen::VectorXd normalized = mu / mu.sum();
  CHECK(0.5 * (normalized - triple.nu).cwiseAbs().sum() < 1e-6);
}

TEST_CASE("irreducibility is required") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 2.0;  // two disconnected states
  CHECK_THROWS_AS(oracle::leading_triple(a), std::invalid_argument);
}

TEST_CASE("power iteration reports non-convergence") {
  auto a = benchmark_matrix(10);
  oracle::EigenOptions opts;
  opts.max_iterations = 4;
  CHECK_THROWS_AS(
      oracle::leading_triple(a, oracle::EigenMethod::kPowerIteration, opts),
      oracle::NonConvergence);
}

TEST_CASE("oracle rejects oversized state spaces") {
  BirthDeathModel::Spec spec;
  spec.dimension = 3;
  spec.cap = 30;  // 31^3 approx 30k states
  spec.birth = [](const BirthDeathModel::State&, int) { return 1.0; };
  spec.death = [](const BirthDeathModel::State& x, int i) {
    return x[static_cast<std::size_t>(i)] > 0 ? 1.0 : 0.0;
  };
  BirthDeathModel model(spec);
  CHECK_THROWS_AS(oracle::tilted_generator(model), std::invalid_argument);
}
