#include "bbmmi/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace bbmmi::oracle {

namespace {

constexpr double kChunkBudget = 30.0;  // theta * tau per uniformization chunk
constexpr int kMaxChunkTerms = 2000;

}  // namespace

UniformizedExponential::UniformizedExponential(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("uniformization: square matrix required");
  theta_ = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    theta_ = std::max(theta_, std::abs(a(i, i)));
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && a(i, j) < 0)
        throw std::invalid_argument("uniformization: negative off-diagonal entry");
  }
  if (theta_ == 0) theta_ = 1.0;

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n) * 4);
  growth_ = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_sum = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      double value = a(i, j) / theta_ + (i == j ? 1.0 : 0.0);
      if (i == j && value < 0) value = 0;  // |a_ii| <= theta up to roundoff
      if (value != 0) entries.emplace_back(static_cast<int>(i), static_cast<int>(j), value);
      row_sum += value;
    }
    growth_ = std::max(growth_, row_sum);
  }
  p_.resize(n, n);
  p_.setFromTriplets(entries.begin(), entries.end());
  p_.makeCompressed();
}

Eigen::VectorXd UniformizedExponential::apply(const Eigen::VectorXd& f, double t) const {
  if (t < 0) throw std::invalid_argument("semigroup time must be nonnegative");
  if (t == 0 || f.size() == 0) return f;
  const int chunks = std::max(1, static_cast<int>(std::ceil(theta_ * t / kChunkBudget)));
  const double tau = t / chunks;
  const double poisson_rate = theta_ * tau;

  Eigen::VectorXd cur = f;
  Eigen::VectorXd term(f.size()), acc(f.size());
  for (int c = 0; c < chunks; ++c) {
    term = cur;
    acc = cur;
    bool converged = false;
    for (int k = 1; k <= kMaxChunkTerms; ++k) {
      term = (p_ * term) * (poisson_rate / k);
      acc += term;
      if (static_cast<double>(k) > poisson_rate * growth_) {
        const double ratio = poisson_rate * growth_ / (k + 1);
        const double tail = term.cwiseAbs().maxCoeff() / (1.0 - ratio);
        if (tail <= 1e-16 * std::max(acc.cwiseAbs().maxCoeff(), 1e-300)) {
          converged = true;
          break;
        }
      }
    }
    if (!converged)
      throw NonConvergence("uniformization series did not converge in a chunk");
    cur = std::exp(-poisson_rate) * acc;
  }
  return cur;
}

Eigen::VectorXd semigroup_apply(const Eigen::MatrixXd& a, const Eigen::VectorXd& f,
                                double t) {
  return UniformizedExponential(a).apply(f, t);
}

Eigen::VectorXd semigroup_apply_left(const Eigen::MatrixXd& a,
                                     const Eigen::VectorXd& mu, double t) {
  return UniformizedExponential(a.transpose()).apply(mu, t);
}

bool is_tridiagonal(const Eigen::MatrixXd& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (std::abs(i - j) > 1 && a(i, j) != 0) return false;
  return true;
}

bool strongly_connected(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (n <= 1) return true;
  auto reach = [&](bool forward) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!stack.empty()) {
      const Eigen::Index i = stack.back();
      stack.pop_back();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (seen[static_cast<std::size_t>(j)] || j == i) continue;
        const double edge = forward ? a(i, j) : a(j, i);
        if (edge > 0) {
          seen[static_cast<std::size_t>(j)] = 1;
          ++count;
          stack.push_back(j);
        }
      }
    }
    return count == n;
  };
  return reach(true) && reach(false);
}

namespace {

double rayleigh(const Eigen::MatrixXd& a, const Eigen::VectorXd& v) {
  return v.dot(a * v) / v.squaredNorm();
}

Eigen::VectorXd power_direction(const Eigen::MatrixXd& a, const EigenOptions& opts,
                                double* lambda_out) {
  const Eigen::Index n = a.rows();
  double max_diag = 0;
  for (Eigen::Index i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double dt = max_diag > 0 ? opts.dt_factor / max_diag : 1.0;
  UniformizedExponential expm(a);

  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0);
  long it = 0;
  while (it < opts.max_iterations) {
    for (int burst = 0; burst < 16 && it < opts.max_iterations; ++burst, ++it) {
      v = expm.apply(v, dt);
      v /= v.maxCoeff();
    }
    const double lambda = rayleigh(a, v);
    const double residual = (a * v - lambda * v).cwiseAbs().maxCoeff();
    if (residual <= opts.residual_tol) {
      if (lambda_out) *lambda_out = lambda;
      return v;
    }
  }
  throw NonConvergence("power iteration on the exponential did not converge");
}

LeadingTriple triple_by_power(const Eigen::MatrixXd& a, const EigenOptions& opts) {
  LeadingTriple out;
  out.eta = power_direction(a, opts, &out.lambda);
  out.eta /= out.eta.maxCoeff();
  out.nu = power_direction(a.transpose(), opts, nullptr);
  out.nu = out.nu.cwiseMax(0.0);
  out.nu /= out.nu.sum();
  // Biorthogonal Rayleigh quotient: second-order accurate in the residuals
  // of either vector, which keeps both eigen identities tight.
  out.lambda = out.nu.dot(a * out.eta) / out.nu.dot(out.eta);
  return out;
}

LeadingTriple triple_by_tridiagonal(const Eigen::MatrixXd& a) {
  // Similarity transform D A D^{-1} with d_{i+1}/d_i = sqrt(u_i / l_{i+1})
  // yields a symmetric tridiagonal matrix with off-diagonal sqrt(u_i l_{i+1});
  // d is kept in log space because it under/overflows for long chains.
  const Eigen::Index n = a.rows();
  Eigen::VectorXd diag(n), subdiag(n - 1), log_d(n);
  log_d[0] = 0;
  for (Eigen::Index i = 0; i < n; ++i) diag[i] = a(i, i);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double up = a(i, i + 1);
    const double down = a(i + 1, i);
    if (!(up > 0) || !(down > 0))
      throw std::invalid_argument("tridiagonal path needs a positive chain");
    subdiag[i] = std::sqrt(up * down);
    log_d[i + 1] = log_d[i] + 0.5 * (std::log(up) - std::log(down));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, subdiag, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw NonConvergence("tridiagonal eigensolver failed");
  LeadingTriple out;
  out.lambda = solver.eigenvalues()[n - 1];
  Eigen::VectorXd psi = solver.eigenvectors().col(n - 1);
  if (psi.sum() < 0) psi = -psi;

  Eigen::VectorXd log_eta(n), log_nu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double log_psi =
        psi[i] > 0 ? std::log(psi[i]) : -745.0 + std::log(1e-30);  // roundoff tail
    log_eta[i] = log_psi - log_d[i];
    log_nu[i] = log_psi + log_d[i];
  }
  out.eta = (log_eta.array() - log_eta.maxCoeff()).exp();
  out.nu = (log_nu.array() - log_nu.maxCoeff()).exp();
  out.nu /= out.nu.sum();
  return out;
}

LeadingTriple triple_by_dense(const Eigen::MatrixXd& a) {
  auto top_vector = [](const Eigen::MatrixXd& m, double* lambda_out) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
      throw NonConvergence("dense eigensolver failed");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < m.rows(); ++i)
      if (solver.eigenvalues()[i].real() > solver.eigenvalues()[best].real()) best = i;
    if (std::abs(solver.eigenvalues()[best].imag()) > 1e-8)
      throw NonConvergence("leading eigenvalue is not real");
    Eigen::VectorXd v = solver.eigenvectors().col(best).real();
    if (v.sum() < 0) v = -v;
    if (lambda_out) *lambda_out = solver.eigenvalues()[best].real();
    return v;
  };
  LeadingTriple out;
  out.eta = top_vector(a, &out.lambda);
  out.eta /= out.eta.maxCoeff();
  out.nu = top_vector(a.transpose(), nullptr);
  out.nu = out.nu.cwiseMax(0.0);
  out.nu /= out.nu.sum();
  return out;
}

}  // namespace

std::pair<double, double> eigen_residuals(const Eigen::MatrixXd& a,
                                          const LeadingTriple& triple) {
  const double right = (a * triple.eta - triple.lambda * triple.eta).cwiseAbs().maxCoeff();
  const double left =
      (a.transpose() * triple.nu - triple.lambda * triple.nu).cwiseAbs().maxCoeff();
  return {right, left};
}

LeadingTriple leading_triple(const Eigen::MatrixXd& a, EigenMethod method,
                             const EigenOptions& opts) {
  const Eigen::Index n = a.rows();
  if (n == 1) {
    LeadingTriple out;
    out.lambda = a(0, 0);
    out.eta = Eigen::VectorXd::Ones(1);
    out.nu = Eigen::VectorXd::Ones(1);
    return out;
  }
  if (!strongly_connected(a))
    throw std::invalid_argument("leading_triple: motion graph is not irreducible");
  if (method == EigenMethod::kAuto)
    method = (n > 256 && is_tridiagonal(a)) ? EigenMethod::kTridiagonal
                                            : EigenMethod::kPowerIteration;
  switch (method) {
    case EigenMethod::kPowerIteration:
      return triple_by_power(a, opts);
    case EigenMethod::kTridiagonal:
      if (!is_tridiagonal(a))
        throw std::invalid_argument("leading_triple: matrix is not tridiagonal");
      return triple_by_tridiagonal(a);
    case EigenMethod::kDense:
      return triple_by_dense(a);
    case EigenMethod::kAuto:
      break;
  }
  return triple_by_power(a, opts);
}

}  // namespace bbmmi::oracle
