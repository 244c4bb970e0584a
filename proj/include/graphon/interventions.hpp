#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "graphon/equilibrium.hpp"
#include "graphon/error.hpp"
#include "graphon/kernels.hpp"
#include "graphon/sampling.hpp"
#include "graphon/spectral.hpp"

namespace graphon {

enum class Policy { optimal, network_heuristic, graphon_heuristic, homogeneous, none };

inline std::string to_string(Policy p) {
  switch (p) {
    case Policy::optimal: return "optimal";
    case Policy::network_heuristic: return "network-heuristic";
    case Policy::graphon_heuristic: return "graphon-heuristic";
    case Policy::homogeneous: return "homogeneous";
    case Policy::none: return "none";
  }
  return "none";
}

/// Data certifying optimality of the planner's solution in the eigenbasis
/// of P/N: maximize sum_l d_l y_l^2 subject to ||y - c||^2 <= C.
struct OptimalityCertificate {
  Eigen::VectorXd d;
  Eigen::VectorXd c;
  Eigen::VectorXd y;
  double mu = 0.0;
  bool hard_case = false;
  /// ||D y - mu (y - c)||_inf
  double kkt_residual = 0.0;
  /// ||y - c||^2 - C
  double budget_residual = 0.0;
};

struct InterventionResult {
  Eigen::VectorXd beta_hat;
  /// Average welfare (1/2N) ||s||^2 at the induced equilibrium; NaN until
  /// evaluated on a network.
  double welfare = std::numeric_limits<double>::quiet_NaN();
  double budget_used = 0.0;
  Policy policy = Policy::none;
  std::optional<OptimalityCertificate> certificate;
  std::string warning;
};

/// LQ complements game on a fixed network, with (I - alpha P/N) factored
/// once so that many interventions can be evaluated cheaply.
class LqNetwork {
 public:
  LqNetwork(const Eigen::MatrixXd& P, double alpha) : alpha_(alpha) {
    detail::validate_network(P);
    detail::require(std::isfinite(alpha), "alpha must be finite");
    const auto n = P.rows();
    scaled_ = P / static_cast<double>(n);
    lambda_max_ = graphon::lambda_max(scaled_);
    detail::require_contraction(std::abs(alpha) * lambda_max_);
    lu_.compute(Eigen::MatrixXd::Identity(n, n) - alpha * scaled_);
    if (!(lu_.rcond() > 1e-14)) throw NumericalError("I - alpha P/N is singular");
  }

  int size() const { return static_cast<int>(scaled_.rows()); }
  double alpha() const { return alpha_; }
  double lambda_max() const { return lambda_max_; }
  const Eigen::MatrixXd& scaled() const { return scaled_; }

  Eigen::VectorXd equilibrium(const Eigen::VectorXd& beta_hat) const {
    detail::require(beta_hat.size() == scaled_.rows(), "intervention has the wrong dimension");
    return lu_.solve(beta_hat);
  }

  double welfare(const Eigen::VectorXd& beta_hat) const {
    return equilibrium(beta_hat).squaredNorm() / (2.0 * size());
  }

  InterventionResult evaluate(InterventionResult r) const {
    r.welfare = welfare(r.beta_hat);
    return r;
  }

 private:
  double alpha_;
  double lambda_max_ = 0.0;
  Eigen::MatrixXd scaled_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// T = (1/2N) ||(I - alpha P/N)^{-1} beta_hat||^2.
inline double welfare(const Eigen::MatrixXd& P, double alpha, const Eigen::VectorXd& beta_hat) {
  return LqNetwork(P, alpha).welfare(beta_hat);
}

namespace detail {

inline void require_budget(double beta, double C) {
  require(std::isfinite(beta), "beta must be finite");
  require(std::isfinite(C) && C >= 0.0, "budget must be nonnegative");
}

inline InterventionResult make_result(Eigen::VectorXd beta_hat, double beta, Policy policy) {
  InterventionResult r;
  r.budget_used = (beta_hat.array() - beta).square().sum();
  r.beta_hat = std::move(beta_hat);
  r.policy = policy;
  return r;
}

}  // namespace detail

inline InterventionResult no_intervention(double beta, int N) {
  detail::require(N >= 1, "number of agents must be positive");
  return detail::make_result(Eigen::VectorXd::Constant(N, beta), beta, Policy::none);
}

/// beta_hat_i = beta + sqrt(C/N) for every agent.
inline InterventionResult homogeneous_policy(double beta, double C, int N) {
  detail::require_budget(beta, C);
  detail::require(N >= 1, "number of agents must be positive");
  auto r = detail::make_result(Eigen::VectorXd::Constant(N, beta + std::sqrt(C / N)), beta,
                               Policy::homogeneous);
  return r;
}

/// beta_hat = beta 1 + sqrt(C) v_1 with v_1 the unit nonnegative Perron
/// eigenvector of P.
inline InterventionResult network_heuristic(const Eigen::MatrixXd& P, double beta, double C) {
  detail::require_budget(beta, C);
  detail::validate_network(P);
  const auto n = P.rows();
  const auto v1 = detail::perron_power_iteration(P / static_cast<double>(n), 1e-10, 100000);
  return detail::make_result(Eigen::VectorXd::Constant(n, beta) + std::sqrt(C) * v1.vector, beta,
                             Policy::network_heuristic);
}

/// beta_hat_i = beta + kappa psi_1(t^i), kappa = sqrt(C / sum_j psi_1(t^j)^2).
/// psi_1 is analytic for ER, SBM and minmax graphons. With M > 0 it is
/// instead taken from power iteration on the M-point discretization.
inline InterventionResult graphon_heuristic(const GraphonSpec& spec, const TypeVector& types,
                                            double beta, double C, int M = 0) {
  detail::require_budget(beta, C);
  detail::require(types.size() >= 1, "need at least one agent");
  GraphonEigenfunction eig;
  if (M > 0) {
    const auto op = discretize(spec, M);
    auto pairs = top_k_eigen(op, 2);
    GridFunction psi = pairs[0].function;
    eig = {pairs[0].value, pairs[1].value, [psi](double x) { return psi(x); }};
  } else {
    eig = dominant_eigenfunction(spec);
  }

  const int n = types.size();
  Eigen::VectorXd psi(n);
  for (int i = 0; i < n; ++i) psi(i) = eig.psi(types.types(i));
  const double mass = psi.squaredNorm();
  double kappa = 0.0;
  if (C > 0.0) {
    if (!(mass > 0.0))
      throw NumericalError("dominant eigenfunction vanishes at every sampled type");
    kappa = std::sqrt(C / mass);
  }
  auto r = detail::make_result(Eigen::VectorXd::Constant(n, beta) + kappa * psi, beta,
                               Policy::graphon_heuristic);
  if (!(eig.lambda1 - eig.lambda2 > 1e-12 * std::max(1.0, std::abs(eig.lambda1))))
    r.warning = "no spectral gap between lambda_1 and lambda_2";
  return r;
}

/// Exact solution of the planner problem
///   max (1/2N) ||(I - alpha P/N)^{-1} beta_hat||^2  s.t. ||beta_hat - beta 1||^2 <= C.
/// In the eigenbasis P/N = sum_l lambda_l u_l u_l^T the objective is
/// sum_l d_l y_l^2 with d_l = (1 - alpha lambda_l)^{-2}, c_l = beta <1, u_l>.
/// The maximizer sits on the sphere with y_l = mu c_l / (mu - d_l), where
/// mu > max d_l solves sum_l (d_l c_l / (mu - d_l))^2 = C.
inline InterventionResult optimal_intervention(const Eigen::MatrixXd& P, double alpha, double beta,
                                               double C) {
  detail::require_budget(beta, C);
  detail::require(alpha > 0.0, "optimal intervention requires alpha > 0");
  const LqNetwork net(P, alpha);
  const int n = net.size();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(net.scaled());
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  const Eigen::MatrixXd& U = solver.eigenvectors();
  const Eigen::VectorXd lambda = solver.eigenvalues();

  OptimalityCertificate cert;
  cert.d = (1.0 - alpha * lambda.array()).square().inverse().matrix();
  cert.c = beta * U.transpose() * Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd& d = cert.d;
  const Eigen::VectorXd& c = cert.c;

  if (C == 0.0) {
    cert.y = c;
    cert.mu = std::numeric_limits<double>::infinity();
  } else {
    const double d_max = d.maxCoeff();
    const double group_tol = d_max * 1e-12;
    double c_top = 0.0;
    Eigen::Index top_index = 0;
    for (Eigen::Index l = 0; l < n; ++l) {
      if (d(l) >= d_max - group_tol) {
        c_top = std::max(c_top, std::abs(c(l)));
        top_index = l;
      }
    }

    auto budget_at = [&](double mu) {
      double g = 0.0;
      for (Eigen::Index l = 0; l < n; ++l) {
        const double t = d(l) * c(l) / (mu - d(l));
        g += t * t;
      }
      return g;
    };

    const bool degenerate_top = c_top <= 1e-14 * (c.norm() + 1.0);
    double rest = 0.0;
    if (degenerate_top) {
      for (Eigen::Index l = 0; l < n; ++l) {
        if (d(l) >= d_max - group_tol) continue;
        const double t = d(l) * c(l) / (d_max - d(l));
        rest += t * t;
      }
    }

    if (degenerate_top && rest <= C) {
      // Hard case: the secular function stays below C as mu -> d_max, so the
      // leftover budget goes along the top eigenvector.
      cert.hard_case = true;
      cert.mu = d_max;
      cert.y = c;
      for (Eigen::Index l = 0; l < n; ++l) {
        if (d(l) >= d_max - group_tol) continue;
        cert.y(l) = d_max * c(l) / (d_max - d(l));
      }
      cert.y(top_index) = c(top_index) + std::sqrt(C - rest);
    } else {
      double lo = d_max;
      double hi = d_max + d_max * c.norm() / std::sqrt(C) * (1.0 + 1e-12) + 1e-300;
      while (budget_at(hi) > C) hi = d_max + 2.0 * (hi - d_max);
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (budget_at(mid) > C) lo = mid;
        else hi = mid;
      }
      cert.mu = hi;
      Eigen::VectorXd step = (d.array() * c.array() / (hi - d.array())).matrix();
      const double norm = step.norm();
      if (norm > 0.0) step *= std::sqrt(C) / norm;
      cert.y = c + step;
    }
  }

  const Eigen::VectorXd r = cert.y - c;
  cert.budget_residual = r.squaredNorm() - C;
  cert.kkt_residual = std::isfinite(cert.mu)
                          ? (d.cwiseProduct(cert.y) - cert.mu * r).lpNorm<Eigen::Infinity>()
                          : 0.0;

  Eigen::VectorXd beta_hat = C == 0.0 ? Eigen::VectorXd::Constant(n, beta) : Eigen::VectorXd(U * cert.y);
  auto result = detail::make_result(std::move(beta_hat), beta, Policy::optimal);
  result.certificate = std::move(cert);
  return net.evaluate(std::move(result));
}

struct WelfareGap {
  double T_nh = 0.0;
  double T_gh = 0.0;
  double gap = 0.0;
};

/// Welfare of the network and graphon heuristics on the same realized
/// network and |T_nh - T_gh|.
inline WelfareGap welfare_gap(const SimpleNetwork& Ps, const GraphonSpec& spec, double alpha,
                              double beta, double C, int M = 0) {
  const LqNetwork net(Ps.A, alpha);
  const double T_nh = net.welfare(network_heuristic(Ps.A, beta, C).beta_hat);
  const double T_gh = net.welfare(graphon_heuristic(spec, Ps.types, beta, C, M).beta_hat);
  return {T_nh, T_gh, std::abs(T_nh - T_gh)};
}

inline nlohmann::json to_json(const InterventionResult& r) {
  nlohmann::json j = {{"policy", to_string(r.policy)},
                      {"beta_hat", detail::vector_to_json(r.beta_hat)},
                      {"welfare", r.welfare},
                      {"budget_used", r.budget_used}};
  if (r.certificate) {
    j["multiplier"] = r.certificate->mu;
    j["kkt_residual"] = r.certificate->kkt_residual;
    j["hard_case"] = r.certificate->hard_case;
  }
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

}  // namespace graphon
