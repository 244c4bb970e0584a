#include <cmath>

#include <gtest/gtest.h>

#include "graphon/kernels.hpp"

using namespace graphon;

namespace {

GraphonSpec example_sbm() {
  Eigen::VectorXd w(2);
  w << 0.75, 0.25;
  return GraphonSpec::sbm(0.8, 0.1, w);
}

}  // namespace

TEST(Kernels, MinMaxKnownValues) {
  const auto mm = GraphonSpec::minmax();
  EXPECT_DOUBLE_EQ(eval(mm, 0.5, 0.5), 0.25);
  for (double y : {0.0, 0.3, 0.7, 1.0}) EXPECT_EQ(eval(mm, 0.0, y), 0.0);
  EXPECT_DOUBLE_EQ(eval(mm, 0.25, 0.75), 0.0625);
}

TEST(Kernels, SbmSameCommunity) {
  const auto sbm = example_sbm();
  EXPECT_DOUBLE_EQ(eval(sbm, 0.1, 0.5), 0.8);
  EXPECT_DOUBLE_EQ(eval(sbm, 0.1, 0.9), 0.1);
  EXPECT_DOUBLE_EQ(eval(sbm, 0.8, 0.9), 0.8);
  // right-open cells: 0.75 belongs to the second community
  EXPECT_EQ(sbm.community(0.75), 1);
  EXPECT_EQ(sbm.community(0.7499), 0);
  EXPECT_EQ(sbm.community(1.0), 1);
}

TEST(Kernels, OutOfRangeCoordinatesRejected) {
  const auto mm = GraphonSpec::minmax();
  EXPECT_THROW(eval(mm, -0.1, 0.5), DomainError);
  EXPECT_THROW(eval(mm, 0.5, 1.01), DomainError);
}

TEST(Kernels, ConstructorValidation) {
  EXPECT_THROW(GraphonSpec::erdos_renyi(1.5), DomainError);
  EXPECT_THROW(GraphonSpec::erdos_renyi(-0.1), DomainError);
  Eigen::MatrixXd Q(2, 2);
  Q << 0.5, 0.2, 0.3, 0.5;
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  EXPECT_THROW(GraphonSpec::sbm(Q, w), DomainError);
  Q(1, 0) = 0.2;
  w << 0.6, 0.6;
  EXPECT_THROW(GraphonSpec::sbm(Q, w), DomainError);
  w << 1.0, 0.0;
  EXPECT_THROW(GraphonSpec::sbm(Q, w), DomainError);
  Eigen::MatrixXd bad(2, 2);
  bad << 0.0, 1.2, 1.2, 0.0;
  EXPECT_THROW(step_graphon_from_matrix(bad), DomainError);
}

TEST(Kernels, StepGraphonLookup) {
  Eigen::MatrixXd P(2, 2);
  P << 0, 1, 1, 0;
  const auto g = step_graphon_from_matrix(P);
  EXPECT_EQ(eval(g, 0.1, 0.9), 1.0);
  EXPECT_EQ(eval(g, 0.1, 0.2), 0.0);
  EXPECT_EQ(eval(g, 0.5, 0.49), 1.0);
  EXPECT_EQ(eval(g, 1.0, 1.0), 0.0);

  const auto zero = step_graphon_from_matrix(Eigen::MatrixXd::Zero(3, 3));
  const auto flat = step_graphon_from_matrix(Eigen::MatrixXd::Constant(4, 4, 0.3));
  for (double x = 0.0; x <= 1.0; x += 0.05)
    for (double y = 0.0; y <= 1.0; y += 0.05) {
      EXPECT_EQ(eval(zero, x, y), 0.0);
      EXPECT_EQ(eval(flat, x, y), 0.3);
    }
}

TEST(Kernels, LipschitzMetadataTable) {
  auto m = lipschitz_metadata(GraphonSpec::minmax());
  EXPECT_EQ(m.L, 2.0);
  EXPECT_EQ(m.Omega, 0);
  m = lipschitz_metadata(example_sbm());
  EXPECT_EQ(m.L, 0.0);
  EXPECT_EQ(m.Omega, 1);
  m = lipschitz_metadata(GraphonSpec::erdos_renyi(0.4));
  EXPECT_EQ(m.L, 0.0);
  EXPECT_EQ(m.Omega, 0);
  m = lipschitz_metadata(GraphonSpec::grid(Eigen::MatrixXd::Constant(5, 5, 0.1)));
  EXPECT_EQ(m.Omega, 4);
}

TEST(KernelProperties, SymmetryAndRangeOnGrid) {
  Eigen::MatrixXd G(3, 3);
  G << 0.1, 0.9, 0.4, 0.9, 0.0, 1.0, 0.4, 1.0, 0.5;
  for (const auto& spec : {GraphonSpec::minmax(), example_sbm(), GraphonSpec::erdos_renyi(0.3),
                           GraphonSpec::grid(G)}) {
    for (int i = 0; i <= 200; ++i)
      for (int j = 0; j <= 200; ++j) {
        const double x = i / 200.0, y = j / 200.0;
        const double v = eval(spec, x, y);
        ASSERT_EQ(v, eval(spec, y, x)) << spec.kind();
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
      }
  }
}

TEST(KernelProperties, MinMaxLipschitz) {
  const auto mm = GraphonSpec::minmax();
  const int n = 40;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b)
      for (int c = 0; c <= n; c += 3)
        for (int d = 0; d <= n; d += 3) {
          const double x = a / double(n), y = b / double(n), xp = c / double(n), yp = d / double(n);
          ASSERT_LE(std::abs(eval(mm, x, y) - eval(mm, xp, yp)),
                    2.0 * (std::abs(x - xp) + std::abs(y - yp)) + 1e-15);
        }
}

TEST(KernelProperties, SbmPiecewiseConstant) {
  const auto sbm = example_sbm();
  for (double x : {0.0, 0.2, 0.5, 0.74})
    for (double y : {0.0, 0.3, 0.74}) EXPECT_EQ(eval(sbm, x, y), 0.8);
  for (double x : {0.75, 0.9, 1.0})
    for (double y : {0.75, 0.8, 1.0}) EXPECT_EQ(eval(sbm, x, y), 0.8);
  for (double x : {0.0, 0.5})
    for (double y : {0.76, 1.0}) EXPECT_EQ(eval(sbm, x, y), 0.1);
}

TEST(KernelsJson, RoundTrip) {
  Eigen::MatrixXd G(2, 2);
  G << 0.2, 0.5, 0.5, 1.0;
  for (const auto& spec : {GraphonSpec::minmax(), example_sbm(), GraphonSpec::erdos_renyi(0.5),
                           GraphonSpec::grid(G)}) {
    const auto back = graphon_from_json(to_json(spec));
    EXPECT_EQ(back.kind(), spec.kind());
    for (double x : {0.1, 0.6, 0.95})
      for (double y : {0.2, 0.8}) EXPECT_EQ(eval(back, x, y), eval(spec, x, y));
  }
  EXPECT_EQ(to_json(GraphonSpec::erdos_renyi(0.5)).dump(), R"({"kind":"er","p":0.5})");
}

TEST(KernelsJson, MalformedInputIsDomainError) {
  EXPECT_THROW(graphon_from_json(nlohmann::json::parse(R"({"kind":"nope"})")), DomainError);
  EXPECT_THROW(graphon_from_json(nlohmann::json::parse(R"({"kind":"er"})")), DomainError);
  EXPECT_THROW(graphon_from_json(nlohmann::json::parse(R"({"kind":"sbm","Q":[[1]],"w":"x"})")),
               DomainError);
  EXPECT_THROW(graphon_from_json(nlohmann::json::parse(R"({"kind":"grid","values":[[0,1],[0]]})")),
               DomainError);
}
