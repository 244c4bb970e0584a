#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "graphon/interventions.hpp"
#include "graphon/rng.hpp"
#include "oracles.hpp"

using namespace graphon;

namespace {

Eigen::MatrixXd random_symmetric(int N, Rng& rng) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) P(i, j) = P(j, i) = rng.uniform();
  return P;
}

Eigen::MatrixXd complete_graph(int N) {
  return Eigen::MatrixXd::Ones(N, N) - Eigen::MatrixXd::Identity(N, N);
}

SimpleNetwork minmax_network(int N, std::uint64_t seed) {
  const auto spec = GraphonSpec::minmax();
  return simple_network(weighted_network(spec, sample_types(N, derive_seed(seed, {0}))),
                        derive_seed(seed, {1}));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(Welfare, ClosedForms) {
  const int N = 10;
  const Eigen::MatrixXd K = Eigen::MatrixXd::Ones(N, N);
  EXPECT_NEAR(welfare(K, 0.5, Eigen::VectorXd::Ones(N)), 2.0, 1e-12);
  EXPECT_NEAR(welfare(K, 0.5, 1.1 * Eigen::VectorXd::Ones(N)) / welfare(K, 0.5, Eigen::VectorXd::Ones(N)),
              1.21, 1e-12);
  EXPECT_NEAR(welfare(Eigen::MatrixXd::Zero(N, N), 0.9, Eigen::VectorXd::Constant(N, 1.5)),
              1.5 * 1.5 / 2.0, 1e-15);
  EXPECT_THROW(welfare(K, 1.5, Eigen::VectorXd::Ones(N)), PreconditionError);
}

TEST(Homogeneous, Examples) {
  const auto zero = homogeneous_policy(1.0, 0.0, 5);
  EXPECT_EQ(zero.beta_hat, Eigen::VectorXd::Ones(5));
  const int N = 300;
  const auto r = homogeneous_policy(1.0, 0.01 * N, N);
  EXPECT_LT((r.beta_hat.array() - 1.1).abs().maxCoeff(), 1e-15);
  EXPECT_NEAR(r.budget_used, 0.01 * N, 1e-12);
  EXPECT_EQ(r.policy, Policy::homogeneous);
  EXPECT_THROW(homogeneous_policy(1.0, -1.0, 5), DomainError);
}

TEST(NetworkHeuristic, Examples) {
  Rng rng(1);
  const Eigen::MatrixXd P = random_symmetric(20, rng);
  EXPECT_EQ(network_heuristic(P, 1.0, 0.0).beta_hat, Eigen::VectorXd::Ones(20));
  const auto r = network_heuristic(P, 1.0, 0.3);
  EXPECT_NEAR(r.budget_used, 0.3, 1e-12);
  EXPECT_TRUE(((r.beta_hat.array() - 1.0) >= 0.0).all());
  const auto full = network_heuristic(complete_graph(9), 2.0, 0.9);
  EXPECT_LT((full.beta_hat - homogeneous_policy(2.0, 0.9, 9).beta_hat).lpNorm<Eigen::Infinity>(),
            1e-10);
}

TEST(GraphonHeuristic, Examples) {
  const auto types = sample_types(40, 3);
  EXPECT_EQ(graphon_heuristic(GraphonSpec::minmax(), types, 1.0, 0.0).beta_hat,
            Eigen::VectorXd::Ones(40));
  const auto r = graphon_heuristic(GraphonSpec::minmax(), types, 1.0, 0.4);
  EXPECT_NEAR(r.budget_used, 0.4, 1e-12);
  EXPECT_TRUE(r.warning.empty());

  Eigen::VectorXd w(2);
  w << 0.75, 0.25;
  const auto sbm = GraphonSpec::sbm(0.8, 0.1, w);
  const auto rs = graphon_heuristic(sbm, types, 1.0, 0.4);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j)
      if (sbm.community(types.types(i)) == sbm.community(types.types(j)))
        EXPECT_EQ(rs.beta_hat(i), rs.beta_hat(j));
  EXPECT_NEAR(rs.budget_used, 0.4, 1e-12);

  // Numerical eigenfunction path agrees with the analytic one.
  const auto rn = graphon_heuristic(GraphonSpec::minmax(), types, 1.0, 0.4, 800);
  EXPECT_LT((rn.beta_hat - r.beta_hat).lpNorm<Eigen::Infinity>(), 1e-3);

  // equal communities with no cross edges: lambda_1 = lambda_2
  Eigen::VectorXd half(2);
  half << 0.5, 0.5;
  const auto tied = graphon_heuristic(GraphonSpec::sbm(0.6, 0.0, half), types, 1.0, 0.4);
  EXPECT_FALSE(tied.warning.empty());
  EXPECT_TRUE(graphon_heuristic(GraphonSpec::sbm(0.5, 0.5, w), types, 1.0, 0.4).warning.empty());
}

TEST(OptimalIntervention, ZeroBudgetAndSingleAgent) {
  Rng rng(2);
  const Eigen::MatrixXd P = random_symmetric(15, rng);
  const auto r = optimal_intervention(P, 1.0, 1.0, 0.0);
  EXPECT_EQ(r.beta_hat, Eigen::VectorXd::Ones(15));
  EXPECT_NEAR(r.welfare, welfare(P, 1.0, Eigen::VectorXd::Ones(15)), 1e-14);

  const auto one = optimal_intervention(Eigen::MatrixXd::Zero(1, 1), 0.5, 1.0, 0.25);
  EXPECT_NEAR(one.beta_hat(0), 1.5, 1e-12);
  EXPECT_THROW(optimal_intervention(P, -0.5, 1.0, 1.0), DomainError);
}

TEST(OptimalIntervention, MatchesSphereSearchForTwoAgents) {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Matrix2d P;
    const double off = rng.uniform();
    P << 0, off, off, 0;
    const double alpha = 0.2 + 1.7 * rng.uniform();
    const double beta = 0.5 + rng.uniform();
    const double C = 0.01 + rng.uniform();
    const auto r = optimal_intervention(P, alpha, beta, C);
    const double brute = oracle::brute_force_sphere2(P, alpha, beta, C);
    EXPECT_NEAR(r.welfare, brute, 1e-6);
    EXPECT_NEAR(r.welfare, oracle::welfare2(P, alpha, r.beta_hat(0), r.beta_hat(1)), 1e-12);
  }
}

// Properties

TEST(InterventionProperties, KktCertificate) {
  Rng rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const int N = 50;
    const Eigen::MatrixXd P = random_symmetric(N, rng);
    const double alpha = 1.5 * rng.uniform() + 0.1;
    const auto r = optimal_intervention(P, alpha, 1.0, 0.01 * N);
    ASSERT_TRUE(r.certificate.has_value());
    EXPECT_LE(r.certificate->kkt_residual, 1e-8);
    EXPECT_LE(std::abs(r.certificate->budget_residual), 1e-8);
    EXPECT_GT(r.certificate->mu, r.certificate->d.maxCoeff());
  }
}

TEST(InterventionProperties, BudgetFeasibilityAndDominance) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const int N = 60;
    const auto Ps = minmax_network(N, seed);
    const double C = 0.05 * N, alpha = 5.0, beta = 1.0;
    const LqNetwork net(Ps.A, alpha);
    const auto hom = net.evaluate(homogeneous_policy(beta, C, N));
    const auto nh = net.evaluate(network_heuristic(Ps.A, beta, C));
    const auto gh = net.evaluate(graphon_heuristic(GraphonSpec::minmax(), Ps.types, beta, C));
    const auto opt = optimal_intervention(Ps.A, alpha, beta, C);
    for (const auto* r : {&hom, &nh, &gh}) EXPECT_NEAR(r->budget_used, C, 1e-9);
    EXPECT_LE(opt.budget_used, C + 1e-9);
    EXPECT_GE(opt.welfare, std::max({hom.welfare, nh.welfare, gh.welfare}) - 1e-9);
  }
}

TEST(InterventionProperties, HeuristicDistanceRate) {
  const std::vector<int> Ns = {100, 200, 400, 800};
  std::vector<double> med;
  for (int N : Ns) {
    std::vector<double> d;
    for (std::uint64_t seed = 0; seed < 7; ++seed) {
      const auto Ps = minmax_network(N, 1000 * N + seed);
      const double C = 0.01 * N;
      const auto nh = network_heuristic(Ps.A, 1.0, C);
      const auto gh = graphon_heuristic(GraphonSpec::minmax(), Ps.types, 1.0, C);
      d.push_back((nh.beta_hat - gh.beta_hat).norm() / std::sqrt(C));
    }
    med.push_back(median(d));
  }
  for (std::size_t k = 1; k < med.size(); ++k) EXPECT_LT(med[k], med[k - 1]);
  double mx = 0, my = 0;
  std::vector<double> x, y;
  for (std::size_t k = 0; k < Ns.size(); ++k) {
    x.push_back(std::log(std::sqrt(std::log(double(Ns[k])) / Ns[k])));
    y.push_back(std::log(med[k]));
    mx += x.back() / Ns.size();
    my += y.back() / Ns.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  const double slope = sxy / sxx;
  EXPECT_GE(slope, 0.5);
  EXPECT_LE(slope, 1.5);
}

TEST(WelfareGap, TrivialCases) {
  const auto Ps = minmax_network(50, 5);
  EXPECT_EQ(welfare_gap(Ps, GraphonSpec::minmax(), 3.0, 1.0, 0.0).gap, 0.0);

  SimpleNetwork full;
  full.A = complete_graph(30);
  full.types = sample_types(30, 1);
  const auto g = welfare_gap(full, GraphonSpec::erdos_renyi(1.0), 0.5, 1.0, 0.3);
  EXPECT_NEAR(g.gap, 0.0, 1e-10);
  EXPECT_GT(g.T_nh, 0.0);
}

TEST(InterventionJson, Fields) {
  const auto r = optimal_intervention(complete_graph(4), 0.5, 1.0, 0.04);
  const auto j = to_json(r);
  EXPECT_EQ(j.at("policy"), "optimal");
  EXPECT_TRUE(j.contains("multiplier"));
  EXPECT_EQ(j.at("beta_hat").size(), 4u);
}
