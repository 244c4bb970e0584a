#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "graphon/error.hpp"
#include "graphon/grid_function.hpp"
#include "graphon/kernels.hpp"
#include "graphon/spectral.hpp"

namespace graphon {

/// U(s, z) = -s^2/2 + s (alpha z + beta). alpha > 0 is a game of strategic
/// complements, alpha < 0 of substitutes.
struct LqPayoff {
  double alpha = 0.0;
  double beta = 1.0;
};

/// Scalar payoff described through its marginal dU/ds. grad_s must be
/// strongly decreasing in s (modulus alpha_U) and Lipschitz in z (ell_U).
/// Strategies live in [lo, hi].
struct GenericPayoff {
  std::function<double(double, double)> grad_s;
  double alpha_U = 1.0;
  double ell_U = 0.0;
  double lo = 0.0;
  double hi = 1.0;
};

enum class SolveMethod { direct_solve, br_iteration };

inline std::string to_string(SolveMethod m) {
  return m == SolveMethod::direct_solve ? "direct-solve" : "br-iteration";
}

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 1'000'000;
  /// Starting profile for best-response iteration; defaults to the lower
  /// strategy bound (generic) or beta (LQ).
  std::optional<Eigen::VectorXd> start;
  /// LQ games only: skip the linear solve and always run best-response
  /// iteration.
  bool force_iteration = false;
};

struct EquilibriumReport {
  Eigen::VectorXd profile;
  int iterations = 0;
  /// ||s - BR(s)||_inf at the returned profile.
  double residual = 0.0;
  double contraction_factor = 0.0;
  double lambda_max = 0.0;
  SolveMethod method = SolveMethod::direct_solve;
  /// L2 norms (grid-normalized) of successive best-response steps.
  std::vector<double> step_history;

  GridFunction as_grid() const { return GridFunction(profile); }
};

inline void validate(const LqPayoff& p) {
  detail::require(std::isfinite(p.alpha), "alpha must be finite");
  detail::require(std::isfinite(p.beta) && p.beta > 0.0, "beta must be positive");
}

/// Checks the constants and spot-checks strong monotonicity of grad_s on a
/// small grid of (s, z) points.
inline void validate(const GenericPayoff& p) {
  detail::require(static_cast<bool>(p.grad_s), "generic payoff needs a gradient");
  detail::require(p.alpha_U > 0.0, "alpha_U must be positive");
  detail::require(p.ell_U >= 0.0, "ell_U must be nonnegative");
  detail::require(p.lo >= 0.0 && p.lo < p.hi && std::isfinite(p.hi),
                  "strategy bounds must satisfy 0 <= lo < hi < inf");
  constexpr int kPoints = 5;
  for (double z : {0.0, p.hi}) {
    double prev_s = p.lo;
    double prev_g = p.grad_s(prev_s, z);
    for (int k = 1; k < kPoints; ++k) {
      const double s = p.lo + (p.hi - p.lo) * k / (kPoints - 1);
      const double g = p.grad_s(s, z);
      detail::require(prev_g - g >= p.alpha_U * (s - prev_s) * (1.0 - 1e-9) - 1e-12,
                      "grad_s is not decreasing at rate alpha_U");
      prev_s = s;
      prev_g = g;
    }
  }
}

/// LQ payoff written as a generic payoff on [0, s_max].
inline GenericPayoff as_generic(const LqPayoff& p, double s_max) {
  return {[alpha = p.alpha, beta = p.beta](double s, double z) { return -s + alpha * z + beta; },
          1.0, std::abs(p.alpha), 0.0, s_max};
}

/// z = (1/N) P s.
inline Eigen::VectorXd local_aggregate(const Eigen::MatrixXd& P, const Eigen::VectorXd& s) {
  detail::require(P.rows() == P.cols() && P.cols() == s.size(),
                  "aggregate dimensions do not match");
  return P * s / static_cast<double>(s.size());
}

inline double br_lq(double z, const LqPayoff& p, std::optional<double> hi = std::nullopt) {
  double s = std::max(0.0, p.alpha * z + p.beta);
  if (hi) s = std::min(s, *hi);
  return s;
}

/// argmax_s U(s, z) over [lo, hi] by bisection on the decreasing map
/// s -> grad_s(s, z).
inline double best_response(const GenericPayoff& p, double z) {
  if (p.grad_s(p.lo, z) <= 0.0) return p.lo;
  if (p.grad_s(p.hi, z) >= 0.0) return p.hi;
  double a = p.lo;
  double b = p.hi;
  while (b - a > 1e-12) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (p.grad_s(mid, z) > 0.0) a = mid;
    else b = mid;
  }
  return 0.5 * (a + b);
}

inline double contraction_factor(const LqPayoff& p, double lambda_max) {
  detail::require(lambda_max >= 0.0, "lambda_max must be nonnegative");
  return std::abs(p.alpha) * lambda_max;
}

inline double contraction_factor(const GenericPayoff& p, double lambda_max) {
  detail::require(lambda_max >= 0.0, "lambda_max must be nonnegative");
  return p.ell_U / p.alpha_U * lambda_max;
}

/// Largest eigenvalue of a symmetric nonnegative matrix (already scaled).
inline double lambda_max(const Eigen::MatrixXd& scaled) {
  return detail::perron_power_iteration(scaled, 1e-10, 100000).value;
}

namespace detail {

inline void validate_network(const Eigen::MatrixXd& P) {
  require(P.rows() == P.cols() && P.rows() >= 1, "network matrix must be square");
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      require(std::isfinite(P(i, j)) && P(i, j) >= 0.0, "network entries must be nonnegative");
      require(std::abs(P(i, j) - P(j, i)) <= 1e-12, "network matrix must be symmetric");
    }
}

inline void require_contraction(double factor) {
  if (!(factor < 1.0)) {
    std::ostringstream os;
    os << "contraction condition violated: (l_U/alpha_U) * lambda_max = " << factor << " >= 1";
    throw PreconditionError(os.str());
  }
}

/// Simultaneous best-response iteration s <- BR(A s) where BR acts
/// entrywise on the aggregate. Returns the first iterate whose fixed-point
/// residual ||s - BR(A s)||_inf is at most tol.
template <class Response>
EquilibriumReport iterate_best_response(const Eigen::MatrixXd& A, Response&& response,
                                        Eigen::VectorXd s, const SolverOptions& options) {
  require(options.tol > 0.0, "tolerance must be positive");
  require(options.max_iter >= 1, "max_iter must be positive");
  const auto n = A.rows();
  require(s.size() == n, "starting profile has the wrong dimension");
  const double root_n = std::sqrt(static_cast<double>(n));
  EquilibriumReport report;
  report.method = SolveMethod::br_iteration;
  Eigen::VectorXd next(n);
  for (int it = 0; it < options.max_iter; ++it) {
    const Eigen::VectorXd z = A * s;
    for (Eigen::Index i = 0; i < n; ++i) next(i) = response(z(i));
    const double step_inf = (next - s).lpNorm<Eigen::Infinity>();
    if (!std::isfinite(step_inf)) throw NumericalError("best-response iteration diverged");
    if (step_inf <= options.tol) {
      report.profile = std::move(s);
      report.iterations = it;
      report.residual = step_inf;
      return report;
    }
    report.step_history.push_back((next - s).norm() / root_n);
    s.swap(next);
  }
  throw IterationLimitError("best-response iteration hit max_iter = " +
                                std::to_string(options.max_iter),
                            s, report.step_history);
}

inline double lq_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& s, const LqPayoff& p) {
  const Eigen::VectorXd z = A * s;
  double r = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r = std::max(r, std::abs(s(i) - br_lq(z(i), p)));
  return r;
}

/// Solves the LQ game on a scaled interaction matrix A (P/N or K/M).
inline EquilibriumReport solve_lq_scaled(const Eigen::MatrixXd& A, double lam,
                                         const LqPayoff& p, const SolverOptions& options) {
  validate(p);
  const double factor = contraction_factor(p, lam);
  require_contraction(factor);
  const auto n = A.rows();

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - p.alpha * A);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("linear system I - alpha*A is singular");
  Eigen::VectorXd direct = lu.solve(Eigen::VectorXd::Constant(n, p.beta));
  if (!direct.allFinite()) throw NumericalError("linear solve produced non-finite values");

  // Complements: the equilibrium is interior, so the linear solve is it.
  // Substitutes: accept the linear solve only when it is nonnegative.
  if (!options.force_iteration && (p.alpha >= 0.0 || direct.minCoeff() >= -1e-12)) {
    direct = direct.cwiseMax(0.0);
    EquilibriumReport report;
    report.residual = lq_residual(A, direct, p);
    report.profile = std::move(direct);
    report.method = SolveMethod::direct_solve;
    report.contraction_factor = factor;
    report.lambda_max = lam;
    return report;
  }

  Eigen::VectorXd start = options.start.value_or(Eigen::VectorXd::Constant(n, p.beta));
  auto report = iterate_best_response(
      A, [&p](double z) { return br_lq(z, p); }, std::move(start), options);
  report.contraction_factor = factor;
  report.lambda_max = lam;
  return report;
}

inline EquilibriumReport solve_generic_scaled(const Eigen::MatrixXd& A, double lam,
                                              const GenericPayoff& p,
                                              const SolverOptions& options) {
  validate(p);
  const double factor = contraction_factor(p, lam);
  require_contraction(factor);
  Eigen::VectorXd start = options.start.value_or(Eigen::VectorXd::Constant(A.rows(), p.lo));
  auto report = iterate_best_response(
      A, [&p](double z) { return best_response(p, z); }, std::move(start), options);
  report.contraction_factor = factor;
  report.lambda_max = lam;
  return report;
}

}  // namespace detail

/// LQ network game with local aggregate z = (1/N) P s.
inline EquilibriumReport solve_network_lq(const Eigen::MatrixXd& P, const LqPayoff& p,
                                          const SolverOptions& options = {}) {
  detail::validate_network(P);
  const Eigen::MatrixXd A = P / static_cast<double>(P.rows());
  return detail::solve_lq_scaled(A, lambda_max(A), p, options);
}

inline EquilibriumReport solve_network_generic(const Eigen::MatrixXd& P, const GenericPayoff& p,
                                               const SolverOptions& options = {}) {
  detail::validate_network(P);
  const Eigen::MatrixXd A = P / static_cast<double>(P.rows());
  return detail::solve_generic_scaled(A, lambda_max(A), p, options);
}

inline EquilibriumReport solve_graphon_lq(const DiscretizedOperator& op, const LqPayoff& p,
                                          const SolverOptions& options = {}) {
  return detail::solve_lq_scaled(op.scaled(), lambda_max(op.scaled()), p, options);
}

inline EquilibriumReport solve_graphon_lq(const GraphonSpec& spec, const LqPayoff& p, int M,
                                          const SolverOptions& options = {}) {
  return solve_graphon_lq(discretize(spec, M), p, options);
}

inline EquilibriumReport solve_graphon_generic(const DiscretizedOperator& op,
                                               const GenericPayoff& p,
                                               const SolverOptions& options = {}) {
  return detail::solve_generic_scaled(op.scaled(), lambda_max(op.scaled()), p, options);
}

inline EquilibriumReport solve_graphon_generic(const GraphonSpec& spec, const GenericPayoff& p,
                                               int M, const SolverOptions& options = {}) {
  return solve_graphon_generic(discretize(spec, M), p, options);
}

// Bounds

struct RhoBound {
  double d_N = 0.0;
  double rho = 0.0;
  double bound_weighted = 0.0;
  double bound_simple = 0.0;
  /// True when (L^2 - Omega^2) d_N^2 + Omega d_N was negative and clamped to 0.
  bool radicand_clamped = false;
};

/// d_N = 1/N + sqrt(8 log(N/delta)/N), rho = 2 sqrt((L^2-Omega^2) d_N^2 + Omega d_N),
/// weighted bound K~ rho and 0-1 bound K~ (rho + sqrt(4 log(2N/delta)/N)).
inline RhoBound bound_rho(int N, double delta, double L, int Omega, double Ktilde) {
  detail::require(N >= 2, "bound_rho needs N >= 2");
  detail::require(delta > 0.0 && delta <= std::exp(-1.0), "delta must lie in (0, 1/e]");
  detail::require(L >= 0.0 && Omega >= 0, "Lipschitz metadata must be nonnegative");
  const double n = N;
  RhoBound b;
  b.d_N = 1.0 / n + std::sqrt(8.0 * std::log(n / delta) / n);
  const double radicand = (L * L - static_cast<double>(Omega) * Omega) * b.d_N * b.d_N + Omega * b.d_N;
  b.radicand_clamped = radicand < 0.0;
  b.rho = 2.0 * std::sqrt(std::max(0.0, radicand));
  b.bound_weighted = Ktilde * b.rho;
  b.bound_simple = Ktilde * (b.rho + std::sqrt(4.0 * std::log(2.0 * n / delta) / n));
  return b;
}

/// K~ = (l_U/alpha_U) s_max / (1 - (l_U/alpha_U) lambda_max).
inline double comparative_statics_bound(double ratio, double lambda_max, double s_max) {
  detail::require(ratio >= 0.0 && lambda_max >= 0.0 && s_max >= 0.0,
                  "comparative statics inputs must be nonnegative");
  const double gap = 1.0 - ratio * lambda_max;
  if (!(gap > 0.0))
    throw DomainError("comparative statics constant diverges: (l_U/alpha_U) lambda_max >= 1");
  return ratio * s_max / gap;
}

inline double comparative_statics_bound(const LqPayoff& p, double lambda_max, double s_max) {
  return comparative_statics_bound(std::abs(p.alpha), lambda_max, s_max);
}

inline double comparative_statics_bound(const GenericPayoff& p, double lambda_max,
                                        double s_max) {
  return comparative_statics_bound(p.ell_U / p.alpha_U, lambda_max, s_max);
}

/// Upper bound on LQ equilibrium strategies: beta / (1 - alpha lambda_max)
/// for complements, beta for substitutes.
inline double default_s_max(const LqPayoff& p, double lambda_max) {
  if (p.alpha > 0.0) {
    const double gap = 1.0 - p.alpha * lambda_max;
    detail::require(gap > 0.0, "s_max undefined outside the contraction regime");
    return p.beta / gap;
  }
  return p.beta;
}

inline double default_s_max(const GenericPayoff& p, double) { return p.hi; }

inline nlohmann::json to_json(const EquilibriumReport& r) {
  return {{"profile", detail::vector_to_json(r.profile)},
          {"residual", r.residual},
          {"iterations", r.iterations},
          {"contraction_factor", r.contraction_factor},
          {"lambda_max", r.lambda_max},
          {"method", to_string(r.method)}};
}

}  // namespace graphon
