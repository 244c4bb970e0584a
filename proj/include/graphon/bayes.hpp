#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphon/equilibrium.hpp"
#include "graphon/error.hpp"
#include "graphon/grid_function.hpp"
#include "graphon/kernels.hpp"
#include "graphon/rng.hpp"

namespace graphon {

struct EpsilonEstimate {
  double epsilon_hat = 0.0;
  int N = 0;
  int trials = 0;
  double L_U = 0.0;
  double std_error = 0.0;
};

/// z(x) = int_0^1 W(x, y) s(y) dy by midpoint quadrature on the grid of s.
inline double expected_aggregate(const GraphonSpec& spec, const GridFunction& sbar, double x) {
  detail::require(x >= 0.0 && x <= 1.0, "type must lie in [0,1]");
  const int M = sbar.resolution();
  double acc = 0.0;
  for (int j = 0; j < M; ++j) acc += spec.value(x, GridFunction::midpoint(j, M)) * sbar.values()(j);
  return acc / M;
}

/// One draw of the aggregate perceived by an agent of type x in an N-agent
/// network: zeta = (1/(N-1)) sum_{j != i} A_ij s(t^j) with t^j ~ U[0,1] and
/// A_ij ~ Bernoulli(W(x, t^j)).
inline double sample_perceived_aggregate(const GraphonSpec& spec, const GridFunction& sbar,
                                         double x, int N, Rng& rng) {
  double acc = 0.0;
  for (int j = 0; j + 1 < N; ++j) {
    const double t = rng.uniform();
    if (rng.bernoulli(spec.value(x, t))) acc += sbar(t);
  }
  return acc / (N - 1);
}

/// Draws of zeta at a fixed type x, one independent stream per trial.
inline std::vector<double> perceived_aggregate_samples(const GraphonSpec& spec,
                                                       const GridFunction& sbar, double x, int N,
                                                       int trials, std::uint64_t seed) {
  detail::require(N >= 2, "population must have at least two agents");
  detail::require(trials >= 1, "need at least one trial");
  std::vector<double> out(static_cast<std::size_t>(trials));
  for (int k = 0; k < trials; ++k) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
    out[static_cast<std::size_t>(k)] = sample_perceived_aggregate(spec, sbar, x, N, rng);
  }
  return out;
}

/// epsilon_hat = 2 L_U mean |zeta(t^i) - z(t^i)| over trials with a fresh
/// type t^i per trial.
inline EpsilonEstimate estimate_epsilon(const GraphonSpec& spec, const GridFunction& sbar,
                                        double L_U, int N, int trials, std::uint64_t seed) {
  detail::require(N >= 2, "population must have at least two agents");
  detail::require(trials >= 2, "need at least two trials for a standard error");
  detail::require(L_U >= 0.0, "L_U must be nonnegative");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int k = 0; k < trials; ++k) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
    const double x = rng.uniform();
    const double zeta = sample_perceived_aggregate(spec, sbar, x, N, rng);
    const double dev = std::abs(zeta - expected_aggregate(spec, sbar, x));
    sum += dev;
    sum_sq += dev * dev;
  }
  const double mean = sum / trials;
  const double var = std::max(0.0, (sum_sq - trials * mean * mean) / (trials - 1));
  EpsilonEstimate e;
  e.epsilon_hat = 2.0 * L_U * mean;
  e.N = N;
  e.trials = trials;
  e.L_U = L_U;
  e.std_error = 2.0 * L_U * std::sqrt(var / trials);
  return e;
}

/// LQ version: solves the graphon game at resolution M and uses
/// L_U = |alpha| s_max.
inline EpsilonEstimate estimate_epsilon(const GraphonSpec& spec, const LqPayoff& p, int N,
                                        int trials, std::uint64_t seed, int M = 1000) {
  const auto op = discretize(spec, M);
  const auto eq = solve_graphon_lq(op, p);
  const double L_U = std::abs(p.alpha) * default_s_max(p, eq.lambda_max);
  return estimate_epsilon(spec, eq.as_grid(), L_U, N, trials, seed);
}

inline EpsilonEstimate estimate_epsilon(const GraphonSpec& spec, const GenericPayoff& p,
                                        double L_U, int N, int trials, std::uint64_t seed,
                                        int M = 1000) {
  const auto eq = solve_graphon_generic(spec, p, M);
  return estimate_epsilon(spec, eq.as_grid(), L_U, N, trials, seed);
}

inline nlohmann::json to_json(const EpsilonEstimate& e) {
  return {{"epsilon_hat", e.epsilon_hat}, {"N", e.N},     {"trials", e.trials},
          {"L_U", e.L_U},                 {"stderr", e.std_error}};
}

}  // namespace graphon
