#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "islimits/diagonal_model.hpp"
#include "islimits/inverse_problem.hpp"
#include "oracles.hpp"

using namespace islimits;

namespace {

// lambda log-uniform on [1e-2, 1e2], z2 uniform on [0, 4].
std::pair<double, double> random_case(Stream& s) {
  const double lambda = std::exp(std::log(1e-2) + uniform01(s) * std::log(1e4));
  return {lambda, 4.0 * uniform01(s)};
}

TEST(DiagonalModel, DerivedQuantities) {
  Vector a(2), g2(2), s2(2), y(2);
  a << 2.0, -1.0;
  g2 << 0.5, 2.0;
  s2 << 1.5, 0.25;
  y << 1.0, -3.0;
  const DiagonalProductModel m(a, g2, s2, y);
  EXPECT_NEAR(m.lambda()[0], 4.0 * 1.5 / 0.5, 1e-15);
  EXPECT_NEAR(m.lambda()[1], 0.25 / 2.0, 1e-15);
  EXPECT_NEAR(m.z2()[0], 1.0 / (4.0 * 1.5 + 0.5), 1e-15);
  EXPECT_NEAR(m.z2()[1], 9.0 / (0.25 + 2.0), 1e-15);
  EXPECT_THROW(DiagonalProductModel(Vector::Zero(1), Vector::Ones(1), Vector::Ones(1),
                                    Vector::Ones(1)),
               std::invalid_argument);
}

TEST(DiagonalModel, FromLambdaRoundTrip) {
  Vector l(3), z2(3);
  l << 0.3, 2.0, 50.0;
  z2 << 0.0, 1.2, 3.5;
  const auto m = DiagonalProductModel::from_lambda(l, z2);
  EXPECT_LT((m.lambda() - l).norm(), 1e-12);
  EXPECT_LT((m.z2() - z2).norm(), 1e-12);
  EXPECT_EQ(m.prefix(2).size(), 2u);
  EXPECT_THROW(m.prefix(4), std::invalid_argument);
}

class MomentRatio : public ::testing::TestWithParam<double> {};

TEST_P(MomentRatio, MatchesQuadrature) {
  const double ell = GetParam();
  Stream s(1, static_cast<std::uint64_t>(ell * 10));
  for (int t = 0; t < 20; ++t) {
    const auto [lambda, z2] = random_case(s);
    const double closed = std::exp(moment_ratio(lambda, z2, ell).log());
    const double quad = oracle::moment_ratio_quadrature(lambda, z2, ell);
    EXPECT_NEAR(closed / quad, 1.0, 1e-6) << "lambda " << lambda << " z2 " << z2;
  }
}

INSTANTIATE_TEST_SUITE_P(Ell, MomentRatio, ::testing::Values(0.5, 2.0, 3.0));

TEST(MomentRatio, RhoAndHellingerAreMembersOfTheFamily) {
  Stream s(2, 0);
  for (int t = 0; t < 20; ++t) {
    const auto [lambda, z2] = random_case(s);
    const double rho_closed = std::log((lambda + 1) / std::sqrt(2 * lambda + 1)) +
                              lambda * z2 / (2 * lambda + 1);
    EXPECT_NEAR(moment_ratio(lambda, z2, 2.0).log(), rho_closed, 1e-12);
    const Vector l = Vector::Constant(1, lambda), z = Vector::Constant(1, z2);
    EXPECT_NEAR(moment_ratio(lambda, z2, 0.5).log(), log_hellinger_product(l, z), 1e-12);
  }
}

TEST(ProductRho, MatchesGeneralInverseProblemFormula) {
  Stream s(3, 0);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(s() % 8);
    Vector a(d), g2(d), s2(d), y(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      a[i] = 0.2 + 2.0 * uniform01(s);
      g2[i] = 0.1 + uniform01(s);
      s2[i] = 0.1 + 2.0 * uniform01(s);
      y[i] = 3.0 * (uniform01(s) - 0.5);
    }
    const DiagonalProductModel m(a, g2, s2, y);
    EXPECT_NEAR(log_rho_product(m).log(), log_rho_posterior_prior(m.to_inverse_problem()).log(),
                1e-10);
  }
}

TEST(ProductRho, NondecreasingInDimension) {
  Stream s(4, 0);
  Vector l(30), z2(30);
  for (int i = 0; i < 30; ++i) std::tie(l[i], z2[i]) = random_case(s);
  double prev = 0.0;
  for (Eigen::Index d = 1; d <= 30; ++d) {
    const double v = log_rho_product(l.head(d), z2.head(d)).log();
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(ExpectedRho, SumOfLogOnePlusLambda) {
  Vector l(3);
  l << 1.0, 2.0, 0.5;
  EXPECT_NEAR(expected_log_rho_linear(l).log(), std::log(2.0) + std::log(3.0) + std::log(1.5),
              1e-15);
}

TEST(ExpectedRho, JensenAgainstDataAverageOfLogRho) {
  Vector l(2);
  l << 1.0, 2.0;
  Stream s(5, 0);
  NormalDistribution normal;
  double mean_log = 0.0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    Vector z2(2);
    for (int j = 0; j < 2; ++j) z2[j] = std::pow(normal(s), 2);
    mean_log += log_rho_product(l, z2).log() / n;
  }
  EXPECT_GE(expected_log_rho_linear(l).log(), mean_log);
}

TEST(Hellinger, ClosedFormMatchesQuadrature) {
  Stream s(6, 0);
  for (int t = 0; t < 20; ++t) {
    const auto [lambda, z2] = random_case(s);
    const double closed =
        log_hellinger_product(Vector::Constant(1, lambda), Vector::Constant(1, z2));
    EXPECT_NEAR(std::exp(closed) / oracle::moment_ratio_quadrature(lambda, z2, 0.5), 1.0, 1e-6);
  }
}

TEST(Hellinger, BoundedByOneAndOneOnlyWithoutInformation) {
  Stream s(7, 0);
  for (int t = 0; t < 100; ++t) {
    const auto [lambda, z2] = random_case(s);
    EXPECT_LT(log_hellinger_product(Vector::Constant(1, lambda), Vector::Constant(1, z2)), 0.0);
  }
  EXPECT_NEAR(log_hellinger_product(Vector::Zero(3), Vector::Constant(3, 2.0)), 0.0, 1e-15);
  EXPECT_NEAR(expected_log_hellinger(Vector::Zero(3)), 0.0, 1e-15);
}

TEST(Hellinger, ExpectationMatchesMonteCarlo) {
  Vector l(3);
  l << 0.5, 2.0, 7.0;
  Stream s(8, 0);
  NormalDistribution normal;
  const int n = 1'000'000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    Vector z2(3);
    for (int j = 0; j < 3; ++j) z2[j] = std::pow(normal(s), 2);
    acc += std::exp(log_hellinger_product(l, z2));
  }
  EXPECT_NEAR(std::exp(expected_log_hellinger(l)) / (acc / n), 1.0, 0.01);
}

TEST(Equivalence, TruncationReport) {
  const auto bounded =
      equivalence_report([](std::size_t i) { return 1.0 / static_cast<double>(i * i); }, 50);
  ASSERT_EQ(bounded.size(), 50u);
  EXPECT_NEAR(bounded.back().tau, 1.625132733621529, 1e-12);  // sum_{i<=50} 1/i^2
  EXPECT_LT(bounded.back().tau, std::numbers::pi * std::numbers::pi / 6.0);
  const auto divergent = equivalence_report([](std::size_t) { return 1.0; }, 50);
  EXPECT_DOUBLE_EQ(divergent.back().tau, 50.0);
  EXPECT_NEAR(divergent.back().log_expected_rho, 50.0 * std::log(2.0), 1e-10);
  EXPECT_NEAR(divergent.back().log_expected_hellinger,
              50.0 * (1.25 * std::log(2.0) - 0.5 * std::log(7.0)), 1e-10);
  const auto zero = equivalence_report([](std::size_t) { return 0.0; }, 5);
  EXPECT_EQ(zero.back().tau, 0.0);
  EXPECT_EQ(zero.back().log_expected_rho, 0.0);
  EXPECT_THROW(equivalence_report([](std::size_t) { return -1.0; }, 5), std::invalid_argument);
}

TEST(VarianceRatio, LimitAndRange) {
  EXPECT_NEAR(variance_ratio(1e6, 0.0), 2.0 / std::sqrt(3.0) - 1.0, 1e-4);
  for (double lambda : log_grid(1.0, 1e6, 61)) EXPECT_LT(variance_ratio(lambda, 0.0), 1.0);
  // Direct evaluation from the moment family.
  const double l = 3.0;
  const double direct = std::pow(l + 1, 1.5) / std::sqrt(3 * l + 1) /
                            std::pow((l + 1) / std::sqrt(2 * l + 1), 2) -
                        1.0;
  EXPECT_NEAR(variance_ratio(l, 0.0), direct, 1e-12);
}

}  // namespace
