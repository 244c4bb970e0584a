#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graphon/error.hpp"
#include "graphon/grid_function.hpp"
#include "graphon/kernels.hpp"
#include "graphon/rng.hpp"

namespace graphon {

/// Midpoint-collocation discretization of the graphon operator on M cells.
/// Applying it to g returns (1/M) * kernel * g.
class DiscretizedOperator {
 public:
  explicit DiscretizedOperator(Eigen::MatrixXd kernel)
      : kernel_(std::move(kernel)),
        scaled_(kernel_ / static_cast<double>(kernel_.rows())) {
    detail::require(kernel_.rows() == kernel_.cols() && kernel_.rows() >= 1,
                    "operator kernel must be square");
  }

  int resolution() const { return static_cast<int>(kernel_.rows()); }
  const Eigen::MatrixXd& kernel_matrix() const { return kernel_; }
  /// kernel_matrix / M, the matrix acting on grid values.
  const Eigen::MatrixXd& scaled() const { return scaled_; }

 private:
  Eigen::MatrixXd kernel_;
  Eigen::MatrixXd scaled_;
};

struct EigenPair {
  double value = 0.0;
  GridFunction function;
  int iterations = 0;
};

inline DiscretizedOperator discretize(const GraphonSpec& spec, int M) {
  detail::require(M >= 2, "discretization needs M >= 2");
  Eigen::MatrixXd K(M, M);
  for (int i = 0; i < M; ++i) {
    const double x = GridFunction::midpoint(i, M);
    for (int j = 0; j <= i; ++j) {
      const double v = spec.value(x, GridFunction::midpoint(j, M));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return DiscretizedOperator(std::move(K));
}

inline GridFunction apply(const DiscretizedOperator& op, const GridFunction& f) {
  detail::require(f.resolution() == op.resolution(),
                  "grid function and operator resolutions differ");
  return GridFunction(op.scaled() * f.values());
}

namespace detail {

struct UnitEigenvector {
  double value = 0.0;
  Eigen::VectorXd vector;  // unit Euclidean norm
  int iterations = 0;
};

/// Fixes the sign ambiguity: entries sum to a nonnegative number; when the
/// sum vanishes the first significant entry is made positive.
inline void orient(Eigen::VectorXd& v) {
  const double sum = v.sum();
  const double scale = v.cwiseAbs().maxCoeff();
  if (std::abs(sum) > 1e-10 * scale * std::sqrt(static_cast<double>(v.size()))) {
    if (sum < 0.0) v = -v;
    return;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-8 * scale) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

/// Power iteration for the largest eigenvalue of a symmetric matrix with
/// nonnegative entries, started from the all-ones vector. The iteration runs
/// on A + shift*I with shift = half the mean row sum, so lambda_max stays
/// strictly dominant even when -lambda_max is also an eigenvalue (bipartite
/// structure). Stops once ||A v - lambda v|| <= tol * max(1, |lambda|).
inline UnitEigenvector perron_power_iteration(const Eigen::MatrixXd& A, double tol,
                                              int max_iter) {
  require(tol > 0.0, "power iteration tolerance must be positive");
  require(max_iter >= 1, "power iteration needs at least one iteration");
  const Eigen::Index n = A.rows();
  const double shift = std::max(0.0, 0.5 * A.sum() / static_cast<double>(n));
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> history;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd w = A * v;
    const double lambda = v.dot(w);
    const double residual = (w - lambda * v).norm();
    history.push_back(residual);
    if (residual <= tol * std::max(1.0, std::abs(lambda))) {
      orient(v);
      return {lambda, std::move(v), it};
    }
    w += shift * v;
    const double norm = w.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw NumericalError("power iteration collapsed to the zero vector");
    v = w / norm;
  }
  throw IterationLimitError("power iteration did not converge within " +
                                std::to_string(max_iter) + " iterations",
                            v, std::move(history));
}

/// The k largest eigenpairs of a symmetric matrix. Eigenvalues come from a
/// dense symmetric QR sweep (no vectors); each eigenvector is then recovered
/// by shifted inverse iteration with reorthogonalization against the vectors
/// already found.
inline std::vector<UnitEigenvector> symmetric_top_k(const Eigen::MatrixXd& A, int k,
                                                    double tol = 1e-10) {
  const auto n = static_cast<int>(A.rows());
  require(k >= 1 && k <= n, "top-k eigen requires 1 <= k <= M");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric eigenvalue solver failed");
  const Eigen::VectorXd& ascending = solver.eigenvalues();
  const double scale = std::max(1e-300, ascending.cwiseAbs().maxCoeff());

  std::vector<UnitEigenvector> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) {
    const double lambda = ascending(n - 1 - r);
    const double shifted = lambda + 1e-9 * std::max(scale, 1e-12);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A - shifted * Eigen::MatrixXd::Identity(n, n));

    Rng rng(static_cast<std::uint64_t>(r));
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.uniform() - 0.5;

    auto reorthogonalize = [&](Eigen::VectorXd& y) {
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& prev : out) y -= prev.vector.dot(y) * prev.vector;
    };

    reorthogonalize(x);
    x.normalize();
    double residual = std::numeric_limits<double>::infinity();
    int it = 0;
    std::vector<double> history;
    constexpr int kMaxInverseIterations = 12;
    while (it < kMaxInverseIterations) {
      ++it;
      Eigen::VectorXd y = lu.solve(x);
      reorthogonalize(y);
      const double norm = y.norm();
      if (!(norm > 0.0) || !std::isfinite(norm))
        throw NumericalError("inverse iteration produced a degenerate vector");
      x = y / norm;
      residual = (A * x - lambda * x).norm();
      history.push_back(residual);
      if (residual <= tol * std::max(1.0, std::abs(lambda))) break;
    }
    if (residual > tol * std::max(1.0, std::abs(lambda)))
      throw IterationLimitError("inverse iteration did not reach the eigenvector tolerance",
                                x, std::move(history));
    orient(x);
    out.push_back({lambda, std::move(x), it});
  }
  return out;
}

inline EigenPair to_eigenpair(UnitEigenvector u) {
  const double root_m = std::sqrt(static_cast<double>(u.vector.size()));
  return {u.value, GridFunction(u.vector * root_m), u.iterations};
}

}  // namespace detail

/// Largest eigenvalue of the discretized operator and its eigenfunction,
/// normalized to unit L2 norm with nonnegative mean.
inline EigenPair dominant_eigenpair(const DiscretizedOperator& op, double tol = 1e-10,
                                    int max_iter = 100000) {
  return detail::to_eigenpair(detail::perron_power_iteration(op.scaled(), tol, max_iter));
}

/// The k largest eigenvalues in descending order with L2-orthonormal
/// eigenfunctions.
inline std::vector<EigenPair> top_k_eigen(const DiscretizedOperator& op, int k,
                                          double tol = 1e-10) {
  std::vector<EigenPair> out;
  for (auto& u : detail::symmetric_top_k(op.scaled(), k, tol))
    out.push_back(detail::to_eigenpair(std::move(u)));
  return out;
}

struct SbmEigenpair {
  double value = 0.0;
  /// Eigenfunction value on each community; unit L2 norm as a function.
  Eigen::VectorXd block_values;
};

/// Eigenpairs of E = Q diag(w), computed from the symmetric similar matrix
/// diag(sqrt(w)) Q diag(sqrt(w)). Descending by value.
inline std::vector<SbmEigenpair> sbm_eigen_analytic(const Eigen::MatrixXd& Q,
                                                    const Eigen::VectorXd& w) {
  const GraphonSpec checked = GraphonSpec::sbm(Q, w);
  (void)checked;
  const Eigen::VectorXd root_w = w.cwiseSqrt();
  const Eigen::MatrixXd S = root_w.asDiagonal() * Q * root_w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
  if (solver.info() != Eigen::Success) throw NumericalError("SBM eigensolver failed");
  const Eigen::Index K = w.size();
  std::vector<SbmEigenpair> out;
  for (Eigen::Index r = K - 1; r >= 0; --r) {
    // ||psi||^2 = sum_k w_k v_k^2 = ||u||^2 = 1 for v = D^{-1/2} u.
    Eigen::VectorXd v = solver.eigenvectors().col(r).cwiseQuotient(root_w);
    if (w.dot(v) < 0.0) v = -v;
    out.push_back({solver.eigenvalues()(r), std::move(v)});
  }
  return out;
}

inline std::vector<SbmEigenpair> sbm_eigen_analytic(const GraphonSpec& spec) {
  const auto* sbm = spec.as<StochasticBlock>();
  detail::require(sbm != nullptr, "analytic SBM spectrum requires an SBM graphon");
  return sbm_eigen_analytic(sbm->Q, sbm->w);
}

/// lambda_h = 1/(pi^2 h^2), psi_h(x) = sqrt(2) sin(h pi x), sampled at the
/// midpoints of an M-grid.
inline EigenPair minmax_eigen_analytic(int h, int M) {
  detail::require(h >= 1, "minmax eigen index must be >= 1");
  constexpr double pi = std::numbers::pi;
  const double value = 1.0 / (pi * pi * h * h);
  return {value,
          GridFunction::sample(M, [h](double x) { return std::sqrt(2.0) * std::sin(h * pi * x); }),
          0};
}

/// L2 -> L2 operator norm of the difference of two discretized operators.
inline double operator_distance(const DiscretizedOperator& a, const DiscretizedOperator& b) {
  detail::require(a.resolution() == b.resolution(), "operator resolutions differ");
  const Eigen::MatrixXd diff = a.scaled() - b.scaled();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(diff, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigenvalue solver failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Dominant eigenfunction of a graphon as a callable on [0,1], together with
/// lambda_1 and lambda_2. Analytic for ER, SBM and minmax; grid kernels are
/// solved exactly at their own resolution.
struct GraphonEigenfunction {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::function<double(double)> psi;
};

inline GraphonEigenfunction dominant_eigenfunction(const GraphonSpec& spec) {
  constexpr double pi = std::numbers::pi;
  if (const auto* er = spec.as<ErdosRenyi>())
    return {er->p, 0.0, [](double) { return 1.0; }};
  if (spec.as<MinMax>())
    return {1.0 / (pi * pi), 1.0 / (4.0 * pi * pi),
            [](double x) { return std::sqrt(2.0) * std::sin(pi * x); }};
  if (spec.as<StochasticBlock>()) {
    auto pairs = sbm_eigen_analytic(spec);
    const double second = pairs.size() > 1 ? pairs[1].value : 0.0;
    Eigen::VectorXd block = pairs.front().block_values;
    return {pairs.front().value, second,
            [spec, block](double x) { return block(spec.community(x)); }};
  }
  const auto& grid = spec.as<GridKernel>()->values;
  const int M = std::max<int>(2, static_cast<int>(grid.rows()));
  auto pairs = top_k_eigen(discretize(spec, M), 2);
  GridFunction psi = pairs[0].function;
  return {pairs[0].value, pairs[1].value, [psi](double x) { return psi(x); }};
}

inline nlohmann::json to_json(const EigenPair& e) {
  return {{"value", e.value}, {"function", to_json(e.function)}};
}

}  // namespace graphon
