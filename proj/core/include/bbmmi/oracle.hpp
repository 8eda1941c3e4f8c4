#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <concepts>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bbmmi/process.hpp"

namespace bbmmi::oracle {

class NonConvergence : public std::runtime_error {
 public:
  explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

/// Jump model over an enumerable finite state space, exposing its raw motion
/// jumps so the tilted generator can be assembled exactly.
template <class M>
concept FiniteStateModelLike =
    JumpModelLike<M> && requires(const M& m, const typename M::State& x) {
      { m.finite() } -> std::convertible_to<bool>;
      { m.enumerate_states() } -> std::same_as<std::vector<typename M::State>>;
      {
        m.transitions(x)
      } -> std::same_as<std::vector<std::pair<typename M::State, double>>>;
    };

/// A = L_motion + diag(b - kappa) over the non-absorbed states, in the fixed
/// enumeration order; jumps into the absorbing set appear only as diagonal
/// leakage (row/column deletion of hard-kill states).
template <class State>
struct EnumeratedGenerator {
  Eigen::MatrixXd matrix;
  std::vector<State> states;

  Eigen::Index index_of(const State& x) const {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(states.size()); ++i)
      if (states[static_cast<std::size_t>(i)] == x) return i;
    throw std::out_of_range("state not in the oracle enumeration");
  }

  Eigen::VectorXd observable(const std::function<double(const State&)>& f) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(states.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v[i] = f(states[static_cast<std::size_t>(i)]);
    return v;
  }
};

inline constexpr Eigen::Index kMaxOracleStates = 20000;

template <FiniteStateModelLike M>
EnumeratedGenerator<typename M::State> tilted_generator(const M& model) {
  using State = typename M::State;
  if (!model.finite())
    throw std::invalid_argument("tilted_generator: model state space is not finite");
  std::vector<State> all = model.enumerate_states();
  EnumeratedGenerator<State> out;
  out.states.reserve(all.size());
  std::map<State, Eigen::Index> index;
  for (auto& x : all) {
    if (model.is_absorbed(x)) continue;
    index.emplace(x, static_cast<Eigen::Index>(out.states.size()));
    out.states.push_back(std::move(x));
  }
  const auto n = static_cast<Eigen::Index>(out.states.size());
  if (n == 0) throw std::invalid_argument("tilted_generator: no interior states");
  if (n > kMaxOracleStates)
    throw std::invalid_argument("tilted_generator: state space too large");

  out.matrix = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const State& x = out.states[static_cast<std::size_t>(i)];
    for (const auto& [y, rate] : model.transitions(x)) {
      if (rate < 0) throw std::invalid_argument("tilted_generator: negative rate");
      if (rate == 0 || y == x) continue;  // self-loops cancel in the generator
      out.matrix(i, i) -= rate;
      if (model.is_absorbed(y)) continue;  // leakage into the boundary
      auto it = index.find(y);
      if (it == index.end())
        throw std::logic_error("tilted_generator: jump target not enumerated");
      out.matrix(i, it->second) += rate;
    }
    out.matrix(i, i) += model.branch_rate(x) - model.kill_rate(x);
  }
  return out;
}

/// Reusable applier of f -> e^{tA} f by uniformization: the exponential is
/// expanded as a Poisson mixture of powers of P = I + A/theta, whose entries
/// are nonnegative, in chunks small enough that every term is representable.
class UniformizedExponential {
 public:
  explicit UniformizedExponential(const Eigen::MatrixXd& a);

  Eigen::VectorXd apply(const Eigen::VectorXd& f, double t) const;

 private:
  Eigen::SparseMatrix<double> p_;
  double theta_;
  double growth_;  // sup row sum of P
};

Eigen::VectorXd semigroup_apply(const Eigen::MatrixXd& a, const Eigen::VectorXd& f,
                                double t);

/// mu^T e^{tA} as a column vector (the measure side of the semigroup).
Eigen::VectorXd semigroup_apply_left(const Eigen::MatrixXd& a,
                                     const Eigen::VectorXd& mu, double t);

struct LeadingTriple {
  double lambda = 0;       // growth rate
  Eigen::VectorXd eta;     // right eigenfunction, sup-normalised to 1
  Eigen::VectorXd nu;      // left eigenmeasure, mass-normalised
};

enum class EigenMethod {
  kAuto,
  kPowerIteration,  // on e^{A dt}, dt = dt_factor / max |diag|
  kTridiagonal,     // symmetrised tridiagonal fast path (birth-death motion)
  kDense,           // dense eigendecomposition, used as a cross-check
};

struct EigenOptions {
  double dt_factor = 0.5;
  double residual_tol = 5e-12;
  long max_iterations = 4'000'000;
};

bool strongly_connected(const Eigen::MatrixXd& a);
bool is_tridiagonal(const Eigen::MatrixXd& a);

LeadingTriple leading_triple(const Eigen::MatrixXd& a,
                             EigenMethod method = EigenMethod::kAuto,
                             const EigenOptions& opts = {});

/// sup norm of A eta - lambda eta (right) and A^T nu - lambda nu (left).
std::pair<double, double> eigen_residuals(const Eigen::MatrixXd& a,
                                          const LeadingTriple& triple);

}  // namespace bbmmi::oracle
