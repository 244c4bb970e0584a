#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <variant>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "graphon/error.hpp"

namespace graphon {

/// Index of the cell of the uniform M-partition that contains x. Cells are
/// right-open, the last one is closed at 1.
inline int cell_index(double x, int M) {
  const int i = static_cast<int>(std::floor(x * M));
  return std::clamp(i, 0, M - 1);
}

struct ErdosRenyi {
  double p = 0.0;
};

/// Stochastic block model. Community k occupies the interval
/// [w_1 + ... + w_{k-1}, w_1 + ... + w_k), laid out left to right.
struct StochasticBlock {
  Eigen::MatrixXd Q;
  Eigen::VectorXd w;
};

/// W(x, y) = min(x, y) * (1 - max(x, y)).
struct MinMax {};

/// Step function on the uniform M-partition of [0,1]^2.
struct GridKernel {
  Eigen::MatrixXd values;
};

struct LipschitzMetadata {
  double L = 0.0;
  int Omega = 0;
};

namespace detail {

inline void validate_symmetric_unit(const Eigen::MatrixXd& A,
                                    const std::string& what) {
  require(A.rows() == A.cols() && A.rows() > 0, what + " must be square and non-empty");
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      const double a = A(i, j);
      require(std::isfinite(a) && a >= 0.0 && a <= 1.0,
              what + " entries must lie in [0,1]");
      require(std::abs(a - A(j, i)) <= 1e-12, what + " must be symmetric");
    }
  }
}

}  // namespace detail

/// Immutable graphon model together with its piecewise-Lipschitz constants
/// (L, Omega).
class GraphonSpec {
 public:
  using Model = std::variant<ErdosRenyi, StochasticBlock, MinMax, GridKernel>;

  static GraphonSpec erdos_renyi(double p) {
    detail::require(std::isfinite(p) && p >= 0.0 && p <= 1.0,
                    "Erdos-Renyi probability must lie in [0,1]");
    return GraphonSpec(ErdosRenyi{p}, 0.0, 0);
  }

  static GraphonSpec sbm(Eigen::MatrixXd Q, Eigen::VectorXd w) {
    detail::validate_symmetric_unit(Q, "SBM matrix Q");
    detail::require(w.size() == Q.rows(), "SBM masses w must have one entry per block");
    for (Eigen::Index k = 0; k < w.size(); ++k)
      detail::require(std::isfinite(w(k)) && w(k) > 0.0, "SBM masses must be positive");
    detail::require(std::abs(w.sum() - 1.0) <= 1e-9, "SBM masses must sum to 1");
    const int K = static_cast<int>(w.size());
    GraphonSpec spec(StochasticBlock{std::move(Q), std::move(w)}, 0.0, K - 1);
    return spec;
  }

  /// Two-community special case Q = g_in * I + g_out * (11^T - I).
  static GraphonSpec sbm(double g_in, double g_out, Eigen::VectorXd w) {
    const Eigen::Index K = w.size();
    detail::require(K >= 1, "SBM needs at least one community");
    Eigen::MatrixXd Q = Eigen::MatrixXd::Constant(K, K, g_out);
    Q.diagonal().setConstant(g_in);
    return sbm(std::move(Q), std::move(w));
  }

  static GraphonSpec minmax() { return GraphonSpec(MinMax{}, 2.0, 0); }

  static GraphonSpec grid(Eigen::MatrixXd values) {
    detail::validate_symmetric_unit(values, "grid kernel");
    const int M = static_cast<int>(values.rows());
    return GraphonSpec(GridKernel{std::move(values)}, 0.0, M - 1);
  }

  const Model& model() const { return model_; }
  double lipschitz_L() const { return L_; }
  int block_count_Omega() const { return omega_; }

  std::string kind() const {
    return std::visit(
        [](const auto& m) -> std::string {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ErdosRenyi>) return "er";
          else if constexpr (std::is_same_v<T, StochasticBlock>) return "sbm";
          else if constexpr (std::is_same_v<T, MinMax>) return "minmax";
          else return "grid";
        },
        model_);
  }

  template <class T>
  const T* as() const {
    return std::get_if<T>(&model_);
  }

  /// Community of x for SBM specs (0-based).
  int community(double x) const {
    const auto* sbm = as<StochasticBlock>();
    detail::require(sbm != nullptr, "community() requires an SBM graphon");
    const Eigen::Index K = sbm->w.size();
    double cut = 0.0;
    for (Eigen::Index k = 0; k + 1 < K; ++k) {
      cut += sbm->w(k);
      if (x < cut) return static_cast<int>(k);
    }
    return static_cast<int>(K - 1);
  }

  /// Unchecked evaluation; callers guarantee x, y in [0,1].
  double value(double x, double y) const {
    return std::visit(
        [&](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ErdosRenyi>) {
            return m.p;
          } else if constexpr (std::is_same_v<T, StochasticBlock>) {
            return m.Q(community(x), community(y));
          } else if constexpr (std::is_same_v<T, MinMax>) {
            return std::min(x, y) * (1.0 - std::max(x, y));
          } else {
            const int M = static_cast<int>(m.values.rows());
            return m.values(cell_index(x, M), cell_index(y, M));
          }
        },
        model_);
  }

 private:
  GraphonSpec(Model model, double L, int omega)
      : model_(std::move(model)), L_(L), omega_(omega) {}

  Model model_;
  double L_;
  int omega_;
};

/// W(x, y). Symmetric by construction.
inline double eval(const GraphonSpec& spec, double x, double y) {
  detail::require(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0,
                  "graphon coordinates must lie in [0,1]");
  return spec.value(x, y);
}

/// Step graphon of a finite network: W(x, y) = P_ij on U_i x U_j.
inline GraphonSpec step_graphon_from_matrix(const Eigen::MatrixXd& P) {
  return GraphonSpec::grid(P);
}

inline LipschitzMetadata lipschitz_metadata(const GraphonSpec& spec) {
  return {spec.lipschitz_L(), spec.block_count_Omega()};
}

// JSON

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& A) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  require(j.is_array() && !j.empty(), "matrix must be a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto m = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd A(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == m,
            "matrix rows must have equal length");
    for (Eigen::Index c = 0; c < m; ++c)
      A(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return A;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  require(j.is_array(), "vector must be a JSON array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace detail

inline nlohmann::json to_json(const GraphonSpec& spec) {
  return std::visit(
      [](const auto& m) -> nlohmann::json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ErdosRenyi>) {
          return {{"kind", "er"}, {"p", m.p}};
        } else if constexpr (std::is_same_v<T, StochasticBlock>) {
          return {{"kind", "sbm"},
                  {"Q", detail::matrix_to_json(m.Q)},
                  {"w", detail::vector_to_json(m.w)}};
        } else if constexpr (std::is_same_v<T, MinMax>) {
          return {{"kind", "minmax"}};
        } else {
          return {{"kind", "grid"}, {"values", detail::matrix_to_json(m.values)}};
        }
      },
      spec.model());
}

inline GraphonSpec graphon_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "er") return GraphonSpec::erdos_renyi(j.at("p").get<double>());
    if (kind == "minmax") return GraphonSpec::minmax();
    if (kind == "sbm")
      return GraphonSpec::sbm(detail::matrix_from_json(j.at("Q")),
                              detail::vector_from_json(j.at("w")));
    if (kind == "grid") return GraphonSpec::grid(detail::matrix_from_json(j.at("values")));
    throw DomainError("unknown graphon kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed graphon JSON: ") + e.what());
  }
}

}  // namespace graphon
