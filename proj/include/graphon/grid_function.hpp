#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "graphon/error.hpp"
#include "graphon/kernels.hpp"

namespace graphon {

/// Piecewise-constant function on the uniform M-partition of [0,1]:
/// f(x) = values[i] for x in U_i = [i/M, (i+1)/M).
class GridFunction {
 public:
  GridFunction() = default;

  explicit GridFunction(Eigen::VectorXd values) : values_(std::move(values)) {
    detail::require(values_.size() >= 1, "grid function needs at least one cell");
  }

  static GridFunction constant(int M, double c) {
    detail::require(M >= 1, "grid resolution must be positive");
    return GridFunction(Eigen::VectorXd::Constant(M, c));
  }

  /// Samples f at the cell midpoints.
  static GridFunction sample(int M, const std::function<double(double)>& f) {
    detail::require(M >= 1, "grid resolution must be positive");
    Eigen::VectorXd v(M);
    for (int i = 0; i < M; ++i) v(i) = f(midpoint(i, M));
    return GridFunction(std::move(v));
  }

  static double midpoint(int i, int M) { return (i + 0.5) / M; }

  int resolution() const { return static_cast<int>(values_.size()); }
  const Eigen::VectorXd& values() const { return values_; }

  double operator()(double x) const {
    return values_(cell_index(x, resolution()));
  }

  double integral() const { return values_.mean(); }

  double l2_norm() const { return std::sqrt(values_.squaredNorm() / values_.size()); }

 private:
  Eigen::VectorXd values_;
};

/// Exact L2 distance between two step functions, integrating over the common
/// refinement of both partitions.
inline double l2_distance(const GridFunction& f, const GridFunction& g) {
  const std::int64_t Mf = f.resolution();
  const std::int64_t Mg = g.resolution();
  if (Mf == Mg) return (f.values() - g.values()).norm() / std::sqrt(static_cast<double>(Mf));

  // Breakpoints i/Mf and j/Mg, scaled by Mf*Mg so they become integers.
  const std::int64_t denom = Mf * Mg;
  std::int64_t pos = 0;
  std::int64_t i = 0;
  std::int64_t j = 0;
  double acc = 0.0;
  while (pos < denom) {
    const std::int64_t next_f = (i + 1) * Mg;
    const std::int64_t next_g = (j + 1) * Mf;
    const std::int64_t next = std::min(next_f, next_g);
    const double diff = f.values()(i) - g.values()(j);
    acc += diff * diff * static_cast<double>(next - pos);
    pos = next;
    if (next == next_f) ++i;
    if (next == next_g) ++j;
  }
  return std::sqrt(acc / static_cast<double>(denom));
}

/// Agent i of an N-agent profile is paired with the cell U_i of the N-grid.
inline GridFunction step_function_embed(const Eigen::VectorXd& s) {
  detail::require(s.size() >= 1, "profile must have at least one agent");
  return GridFunction(s);
}

inline nlohmann::json to_json(const GridFunction& f) {
  return detail::vector_to_json(f.values());
}

}  // namespace graphon
