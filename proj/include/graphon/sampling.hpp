#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ostream>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "graphon/error.hpp"
#include "graphon/kernels.hpp"
#include "graphon/rng.hpp"

namespace graphon {

/// Agent types t^1 <= ... <= t^N drawn iid Uniform[0,1].
struct TypeVector {
  Eigen::VectorXd types;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(types.size()); }
};

/// [P_w]_ij = W(t^i, t^j) for i != j, zero diagonal.
struct WeightedNetwork {
  Eigen::MatrixXd P;
  TypeVector types;
};

/// 0-1 network with A_ij ~ Bernoulli([P_w]_ij).
struct SimpleNetwork {
  Eigen::MatrixXd A;
  TypeVector types;
  std::uint64_t seed = 0;
};

inline TypeVector sample_types(int N, std::uint64_t seed) {
  detail::require(N >= 1, "number of agents must be positive");
  Rng rng(seed);
  Eigen::VectorXd t(N);
  for (int i = 0; i < N; ++i) t(i) = rng.uniform();
  std::sort(t.data(), t.data() + N);
  return {std::move(t), seed};
}

inline WeightedNetwork weighted_network(const GraphonSpec& spec, const TypeVector& types) {
  const int N = types.size();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      const double w = spec.value(types.types(i), types.types(j));
      P(i, j) = w;
      P(j, i) = w;
    }
  }
  return {std::move(P), types};
}

/// Draws are consumed in row-major upper-triangle order (i < j), one uniform
/// per pair, with an edge iff u < P_ij.
inline SimpleNetwork simple_network(const WeightedNetwork& Pw, std::uint64_t seed) {
  const auto N = Pw.P.rows();
  Rng rng(seed);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i + 1; j < N; ++j) {
      if (rng.bernoulli(Pw.P(i, j))) {
        A(i, j) = 1.0;
        A(j, i) = 1.0;
      }
    }
  }
  return {std::move(A), Pw.types, seed};
}

// Export / import

/// One row "i,j,weight" per nonzero upper-triangle entry, 0-based indices.
inline void write_edge_list_csv(std::ostream& os, const Eigen::MatrixXd& P) {
  os << "i,j,weight\n";
  char buf[64];
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < P.cols(); ++j) {
      if (P(i, j) == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%.17g", P(i, j));
      os << i << ',' << j << ',' << buf << '\n';
    }
  }
}

inline nlohmann::json network_bundle(const Eigen::MatrixXd& P, const TypeVector& types) {
  return {{"types", detail::vector_to_json(types.types)},
          {"seed", types.seed},
          {"matrix", detail::matrix_to_json(P)}};
}

/// Reads {"matrix": [[...]], "types": [...]?}. Types are optional; when
/// absent the cell midpoints are used. Validates symmetry and range.
inline WeightedNetwork network_from_json(const nlohmann::json& j) {
  try {
    Eigen::MatrixXd P = detail::matrix_from_json(j.at("matrix"));
    detail::validate_symmetric_unit(P, "network matrix");
    const auto N = P.rows();
    TypeVector types;
    if (j.contains("types")) {
      types.types = detail::vector_from_json(j.at("types"));
      detail::require(types.types.size() == N, "types must have one entry per agent");
    } else {
      types.types.resize(N);
      for (Eigen::Index i = 0; i < N; ++i) types.types(i) = (i + 0.5) / static_cast<double>(N);
    }
    if (j.contains("seed")) types.seed = j.at("seed").get<std::uint64_t>();
    return {std::move(P), std::move(types)};
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed network JSON: ") + e.what());
  }
}

}  // namespace graphon
