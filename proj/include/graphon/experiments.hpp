#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "graphon/equilibrium.hpp"
#include "graphon/error.hpp"
#include "graphon/grid_function.hpp"
#include "graphon/interventions.hpp"
#include "graphon/kernels.hpp"
#include "graphon/rng.hpp"
#include "graphon/sampling.hpp"
#include "graphon/spectral.hpp"

namespace graphon {

/// Runs task(0..count-1) on up to `jobs` threads (0 = hardware concurrency).
/// Tasks write to their own output slots, so results do not depend on the
/// number of workers. The first exception escaping a task is rethrown.
template <class Task>
void parallel_for(int count, int jobs, Task&& task) {
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::max(1, std::min(jobs, count));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

struct Percentiles {
  double p0 = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p95 = 0.0;
};

/// Linear interpolation between order statistics.
inline double percentile(std::vector<double> values, double q) {
  detail::require(!values.empty(), "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline Percentiles percentiles(const std::vector<double>& values) {
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, nan, nan};
  }
  return {percentile(values, 0), percentile(values, 25), percentile(values, 50),
          percentile(values, 75), percentile(values, 95)};
}

/// True when every sampled type lies within d_N of every point of its cell:
/// max_i sup_{x in U_i} |t^i - x| <= d_N.
inline bool types_within(const TypeVector& types, double d_N) {
  const int N = types.size();
  for (int i = 0; i < N; ++i) {
    const double t = types.types(i);
    const double worst = std::max(std::abs(t - static_cast<double>(i) / N),
                                  std::abs(t - static_cast<double>(i + 1) / N));
    if (worst > d_N) return false;
  }
  return true;
}

// Equilibrium distance experiment

struct DistanceConfig {
  std::vector<int> Ns;
  int trials = 50;
  double delta = 0.05;
  int M = 2000;
  std::uint64_t seed = 0;
  int jobs = 0;
  /// Place agent types at the cell midpoints instead of sampling them.
  bool types_at_midpoints = false;
};

enum class NetworkKind : char { weighted = 'w', simple = 's' };

struct DistanceRecord {
  int N = 0;
  int trial = 0;
  NetworkKind kind = NetworkKind::weighted;
  double distance = 0.0;
  double bound = 0.0;
  bool d_N_event = false;
  bool failed = false;
};

struct DistanceStats {
  int N = 0;
  NetworkKind kind = NetworkKind::weighted;
  int trials = 0;
  int failures = 0;
  Percentiles percentiles;
  double d_N = 0.0;
  double rho = 0.0;
  double bound_weighted = 0.0;
  double bound_simple = 0.0;
};

struct DistanceExperiment {
  GridFunction reference;
  double lambda_max = 0.0;
  double s_max = 0.0;
  double Ktilde = 0.0;
  std::vector<DistanceRecord> records;  // ordered by (N, trial, kind)
  std::vector<DistanceStats> stats;     // ordered by (N, kind)

  const DistanceStats& find(int N, NetworkKind kind) const {
    for (const auto& s : stats)
      if (s.N == N && s.kind == kind) return s;
    throw DomainError("no statistics for N = " + std::to_string(N));
  }
};

namespace detail {

inline EquilibriumReport solve_network(const Eigen::MatrixXd& P, const LqPayoff& p) {
  return solve_network_lq(P, p);
}

inline EquilibriumReport solve_network(const Eigen::MatrixXd& P, const GenericPayoff& p) {
  return solve_network_generic(P, p);
}

inline EquilibriumReport solve_graphon(const DiscretizedOperator& op, const LqPayoff& p) {
  return solve_graphon_lq(op, p);
}

inline EquilibriumReport solve_graphon(const DiscretizedOperator& op, const GenericPayoff& p) {
  return solve_graphon_generic(op, p);
}

inline TypeVector midpoint_types(int N) {
  TypeVector t;
  t.types.resize(N);
  for (int i = 0; i < N; ++i) t.types(i) = GridFunction::midpoint(i, N);
  return t;
}

}  // namespace detail

/// For each N and trial: sample types, build P_w and P_s, solve both network
/// games and record the L2 distance of their step-function equilibria to the
/// graphon equilibrium computed once at resolution M.
template <class Payoff>
DistanceExperiment distance_experiment(const GraphonSpec& spec, const Payoff& payoff,
                                       const DistanceConfig& config) {
  detail::require(!config.Ns.empty(), "distance experiment needs at least one N");
  detail::require(config.trials >= 1, "distance experiment needs at least one trial");
  for (int N : config.Ns) {
    detail::require(N >= 2, "population sizes must be >= 2");
    detail::require(config.M >= 2 * N || config.types_at_midpoints,
                    "reference resolution M must be at least 2 * max(Ns)");
  }

  DistanceExperiment out;
  const auto op = discretize(spec, config.M);
  const auto reference = detail::solve_graphon(op, payoff);
  out.reference = reference.as_grid();
  out.lambda_max = reference.lambda_max;
  out.s_max = default_s_max(payoff, out.lambda_max);
  out.Ktilde = comparative_statics_bound(payoff, out.lambda_max, out.s_max);
  const auto meta = lipschitz_metadata(spec);

  const int per_N = config.trials;
  const int total = static_cast<int>(config.Ns.size()) * per_N;
  out.records.resize(static_cast<std::size_t>(2 * total));

  std::vector<RhoBound> bounds;
  for (int N : config.Ns)
    bounds.push_back(bound_rho(N, config.delta, meta.L, meta.Omega, out.Ktilde));

  parallel_for(total, config.jobs, [&](int task) {
    const auto n_index = static_cast<std::size_t>(task / per_N);
    const int N = config.Ns[n_index];
    const int trial = task % per_N;
    const auto& bound = bounds[n_index];

    const auto n_label = static_cast<std::uint64_t>(N);
    const auto t_label = static_cast<std::uint64_t>(trial);
    TypeVector types = config.types_at_midpoints
                           ? detail::midpoint_types(N)
                           : sample_types(N, derive_seed(config.seed, {n_label, t_label, 0}));
    const bool event = types_within(types, bound.d_N);
    const auto Pw = weighted_network(spec, types);
    const auto Ps = simple_network(Pw, derive_seed(config.seed, {n_label, t_label, 1}));

    auto run = [&](const Eigen::MatrixXd& P, NetworkKind kind, double b) {
      DistanceRecord r{N, trial, kind, std::numeric_limits<double>::quiet_NaN(), b, event, false};
      try {
        const auto eq = detail::solve_network(P, payoff);
        r.distance = l2_distance(step_function_embed(eq.profile), out.reference);
      } catch (const Error&) {
        r.failed = true;
      }
      return r;
    };
    out.records[static_cast<std::size_t>(2 * task)] =
        run(Pw.P, NetworkKind::weighted, bound.bound_weighted);
    out.records[static_cast<std::size_t>(2 * task + 1)] =
        run(Ps.A, NetworkKind::simple, bound.bound_simple);
  });

  for (std::size_t k = 0; k < config.Ns.size(); ++k) {
    for (NetworkKind kind : {NetworkKind::weighted, NetworkKind::simple}) {
      DistanceStats s;
      s.N = config.Ns[k];
      s.kind = kind;
      s.d_N = bounds[k].d_N;
      s.rho = bounds[k].rho;
      s.bound_weighted = bounds[k].bound_weighted;
      s.bound_simple = bounds[k].bound_simple;
      std::vector<double> values;
      for (const auto& r : out.records) {
        if (r.N != s.N || r.kind != kind) continue;
        if (r.failed) ++s.failures;
        else values.push_back(r.distance);
      }
      s.trials = static_cast<int>(values.size()) + s.failures;
      s.percentiles = percentiles(values);
      out.stats.push_back(s);
    }
  }
  return out;
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  /// Least-squares scale gamma of medians ~ gamma * sqrt(log(N/delta)/N).
  double gamma = 0.0;
};

/// Least-squares fit of log(median) against log(sqrt(log(N/delta)/N)).
inline RateFit rate_fit(const std::vector<int>& Ns, const std::vector<double>& medians,
                        double delta) {
  detail::require(Ns.size() == medians.size() && Ns.size() >= 2,
                  "rate fit needs at least two (N, median) pairs");
  detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
  const auto n = static_cast<double>(Ns.size());
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> rate;
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    detail::require(medians[i] > 0.0, "rate fit needs positive medians");
    detail::require(Ns[i] >= 1, "population sizes must be positive");
    const double r = std::sqrt(std::log(Ns[i] / delta) / Ns[i]);
    rate.push_back(r);
    x.push_back(std::log(r));
    y.push_back(std::log(medians[i]));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  detail::require(sxx > 0.0, "rate fit needs at least two distinct N");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = std::max(0.0, syy - fit.slope * sxy);
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rate.size(); ++i) {
    num += medians[i] * rate[i];
    den += rate[i] * rate[i];
  }
  fit.gamma = num / den;
  return fit;
}

// Intervention experiment

struct WelfareConfig {
  std::vector<int> Ns;
  int trials = 20;
  double alpha = 5.0;
  double beta = 1.0;
  double c_per_agent = 0.01;
  int optimal_cap = 150;
  std::uint64_t seed = 0;
  int jobs = 0;
  /// Resolution for a numerical graphon eigenfunction; 0 uses the analytic
  /// one where available.
  int eigen_M = 0;
};

struct WelfareRecord {
  int N = 0;
  int trial = 0;
  double T = 0.0;
  double T_hom = 0.0;
  double T_nh = 0.0;
  double T_gh = 0.0;
  std::optional<double> T_opt;
  double gap = 0.0;
  bool failed = false;
};

struct WelfareStats {
  int N = 0;
  int trials = 0;
  int failures = 0;
  double mean_T = 0.0;
  double mean_T_hom = 0.0;
  double mean_T_nh = 0.0;
  double mean_T_gh = 0.0;
  std::optional<double> mean_T_opt;
  Percentiles gap;
  Percentiles ratio_gh_nh;
};

struct WelfareExperiment {
  std::vector<WelfareRecord> records;  // ordered by (N, trial)
  std::vector<WelfareStats> stats;     // ordered by N

  const WelfareStats& find(int N) const {
    for (const auto& s : stats)
      if (s.N == N) return s;
    throw DomainError("no statistics for N = " + std::to_string(N));
  }
};

/// For each N and trial: sample P_s, then compute welfare without
/// intervention and under the homogeneous, network-heuristic,
/// graphon-heuristic and (for N <= optimal_cap) optimal policies with budget
/// C = c_per_agent * N.
inline WelfareExperiment intervention_experiment(const GraphonSpec& spec,
                                                 const WelfareConfig& config) {
  detail::require(config.alpha > 0.0, "interventions require alpha > 0");
  detail::require(config.beta > 0.0, "beta must be positive");
  detail::require(config.c_per_agent >= 0.0, "budget must be nonnegative");
  detail::require(!config.Ns.empty() && config.trials >= 1, "empty experiment");
  for (int N : config.Ns) detail::require(N >= 2, "population sizes must be >= 2");

  const int per_N = config.trials;
  const int total = static_cast<int>(config.Ns.size()) * per_N;
  WelfareExperiment out;
  out.records.resize(static_cast<std::size_t>(total));

  parallel_for(total, config.jobs, [&](int task) {
    const int N = config.Ns[static_cast<std::size_t>(task / per_N)];
    const int trial = task % per_N;
    WelfareRecord rec;
    rec.N = N;
    rec.trial = trial;
    try {
      const auto n_label = static_cast<std::uint64_t>(N);
      const auto t_label = static_cast<std::uint64_t>(trial);
      const auto types = sample_types(N, derive_seed(config.seed, {n_label, t_label, 0}));
      const auto Ps = simple_network(weighted_network(spec, types),
                                     derive_seed(config.seed, {n_label, t_label, 1}));
      const double C = config.c_per_agent * N;
      const LqNetwork net(Ps.A, config.alpha);
      rec.T = net.welfare(no_intervention(config.beta, N).beta_hat);
      rec.T_hom = net.welfare(homogeneous_policy(config.beta, C, N).beta_hat);
      rec.T_nh = net.welfare(network_heuristic(Ps.A, config.beta, C).beta_hat);
      rec.T_gh =
          net.welfare(graphon_heuristic(spec, types, config.beta, C, config.eigen_M).beta_hat);
      if (N <= config.optimal_cap)
        rec.T_opt = optimal_intervention(Ps.A, config.alpha, config.beta, C).welfare;
      rec.gap = std::abs(rec.T_nh - rec.T_gh);
    } catch (const Error&) {
      rec.failed = true;
    }
    out.records[static_cast<std::size_t>(task)] = rec;
  });

  for (int N : config.Ns) {
    WelfareStats s;
    s.N = N;
    std::vector<double> gaps;
    std::vector<double> ratios;
    int opt_count = 0;
    double opt_sum = 0.0;
    for (const auto& r : out.records) {
      if (r.N != N) continue;
      if (r.failed) {
        ++s.failures;
        continue;
      }
      s.mean_T += r.T;
      s.mean_T_hom += r.T_hom;
      s.mean_T_nh += r.T_nh;
      s.mean_T_gh += r.T_gh;
      if (r.T_opt) {
        opt_sum += *r.T_opt;
        ++opt_count;
      }
      gaps.push_back(r.gap);
      ratios.push_back(r.T_gh / r.T_nh);
    }
    const int ok = static_cast<int>(gaps.size());
    s.trials = ok + s.failures;
    if (ok > 0) {
      s.mean_T /= ok;
      s.mean_T_hom /= ok;
      s.mean_T_nh /= ok;
      s.mean_T_gh /= ok;
    }
    if (opt_count > 0) s.mean_T_opt = opt_sum / opt_count;
    s.gap = percentiles(gaps);
    s.ratio_gh_nh = percentiles(ratios);
    out.stats.push_back(s);
  }
  return out;
}

// CSV output. Numbers are printed with %.17g so reruns are byte-identical.

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline constexpr const char* kDistanceCsvHeader = "N,trial,kind,distance,bound,d_N_event";
inline constexpr const char* kWelfareCsvHeader = "N,trial,T,T_hom,T_nh,T_gh,T_opt,gap";

inline void write_distance_csv(std::ostream& os, const DistanceExperiment& e) {
  os << kDistanceCsvHeader << '\n';
  for (const auto& r : e.records) {
    os << r.N << ',' << r.trial << ',' << static_cast<char>(r.kind) << ','
       << (r.failed ? std::string("failed") : detail::fmt_double(r.distance)) << ','
       << detail::fmt_double(r.bound) << ',' << (r.d_N_event ? 1 : 0) << '\n';
  }
}

inline void write_distance_stats_csv(std::ostream& os, const DistanceExperiment& e) {
  os << "N,kind,trials,failures,p0,p25,p50,p75,p95,d_N,rho,bound_weighted,bound_simple\n";
  for (const auto& s : e.stats) {
    os << s.N << ',' << static_cast<char>(s.kind) << ',' << s.trials << ',' << s.failures;
    for (double v : {s.percentiles.p0, s.percentiles.p25, s.percentiles.p50, s.percentiles.p75,
                     s.percentiles.p95, s.d_N, s.rho, s.bound_weighted, s.bound_simple})
      os << ',' << detail::fmt_double(v);
    os << '\n';
  }
}

inline void write_welfare_csv(std::ostream& os, const WelfareExperiment& e) {
  os << kWelfareCsvHeader << '\n';
  for (const auto& r : e.records) {
    os << r.N << ',' << r.trial << ',';
    if (r.failed) {
      os << "failed,failed,failed,failed,,failed\n";
      continue;
    }
    os << detail::fmt_double(r.T) << ',' << detail::fmt_double(r.T_hom) << ','
       << detail::fmt_double(r.T_nh) << ',' << detail::fmt_double(r.T_gh) << ','
       << (r.T_opt ? detail::fmt_double(*r.T_opt) : std::string()) << ','
       << detail::fmt_double(r.gap) << '\n';
  }
}

inline void write_welfare_stats_csv(std::ostream& os, const WelfareExperiment& e) {
  os << "N,trials,failures,mean_T,mean_T_hom,mean_T_nh,mean_T_gh,mean_T_opt,"
        "gap_p0,gap_p25,gap_p50,gap_p75,gap_p95,"
        "ratio_p0,ratio_p25,ratio_p50,ratio_p75,ratio_p95\n";
  for (const auto& s : e.stats) {
    os << s.N << ',' << s.trials << ',' << s.failures;
    for (double v : {s.mean_T, s.mean_T_hom, s.mean_T_nh, s.mean_T_gh})
      os << ',' << detail::fmt_double(v);
    os << ',' << (s.mean_T_opt ? detail::fmt_double(*s.mean_T_opt) : std::string());
    for (const auto* p : {&s.gap, &s.ratio_gh_nh})
      for (double v : {p->p0, p->p25, p->p50, p->p75, p->p95}) os << ',' << detail::fmt_double(v);
    os << '\n';
  }
}

/// (grid midpoint, value) rows.
inline void write_grid_csv(std::ostream& os, const GridFunction& f) {
  os << "x,value\n";
  const int M = f.resolution();
  for (int i = 0; i < M; ++i)
    os << detail::fmt_double(GridFunction::midpoint(i, M)) << ','
       << detail::fmt_double(f.values()(i)) << '\n';
}

}  // namespace graphon
