#include <gtest/gtest.h>

#include <cmath>

#include "islimits/errors.hpp"
#include "islimits/importance_sampling.hpp"
#include "islimits/inverse_problem.hpp"
#include "oracles.hpp"

using namespace islimits;

namespace {

TEST(InverseProblem, ValidatesShapesRankAndDefiniteness) {
  const Matrix i2 = Matrix::Identity(2, 2);
  EXPECT_THROW(LinearGaussianInverseProblem(Matrix::Ones(3, 2), Matrix::Identity(3, 3), i2,
                                            Vector::Zero(3)),
               std::invalid_argument);
  Matrix rank_one(2, 3);
  rank_one << 1, 2, 3, 2, 4, 6;
  EXPECT_THROW(LinearGaussianInverseProblem(rank_one, i2, Matrix::Identity(3, 3), Vector::Zero(2)),
               FullRankViolation);
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  EXPECT_THROW(LinearGaussianInverseProblem(i2, bad, i2, Vector::Zero(2)), NotPositiveDefinite);
  EXPECT_THROW(LinearGaussianInverseProblem(i2, i2, bad, Vector::Zero(2)), NotPositiveDefinite);
  EXPECT_THROW(LinearGaussianInverseProblem(i2, i2, i2, Vector::Zero(3)), std::invalid_argument);
}

TEST(Posterior, MatchesInformationForm) {
  Stream s(1, 0);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(s() % 6);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(s() % d);
    const auto ip = random_problem(d, k, s);
    const auto post = posterior(ip);
    const auto ref =
        oracle::information_posterior(ip.design(), ip.noise_cov(), ip.prior_cov(), ip.data());
    EXPECT_LT((post.mean - ref.mean).norm(), 1e-8 * (1.0 + ref.mean.norm()));
    EXPECT_LT((post.cov - ref.cov).norm(), 1e-8 * ref.cov.norm());
    EXPECT_LT((post.cov - post.cov.transpose()).norm(), 1e-14 * post.cov.norm());
  }
}

TEST(LogRho, AgreesWithGeneralGaussianFormula) {
  Stream s(2, 0);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(s() % 6);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(s() % d);
    const auto ip = random_problem(d, k, s);
    const double a = log_rho_posterior_prior(ip).log();
    const double b = chi2_rho_gaussians(posterior(ip).as_gaussian(), ip.prior()).log();
    EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, std::abs(b))) << "d " << d << " k " << k;
  }
}

TEST(LogRho, ScalarCaseMatchesQuadrature) {
  for (double gamma2 : {0.1, 1.0, 5.0}) {
    for (double y : {0.0, 1.5}) {
      const LinearGaussianInverseProblem ip(Matrix::Constant(1, 1, 2.0),
                                            Matrix::Constant(1, 1, gamma2),
                                            Matrix::Constant(1, 1, 0.7), Vector::Constant(1, y));
      const auto post = posterior(ip);
      const double quad =
          oracle::rho_quadrature_1d(post.mean[0], post.cov(0, 0), 0.0, 0.7);
      EXPECT_NEAR(log_rho_posterior_prior(ip).log(), std::log(quad), 1e-9);
    }
  }
}

TEST(LogRho, IncreasesAsNoiseShrinks) {
  Stream s(3, 0);
  const auto base = random_problem(4, 3, s);
  const auto grid = log_grid(1.0, 1e-3, 15);
  const auto sweep = noise_sweep(base, grid, 2);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    EXPECT_GT(sweep[i].log_rho.log(), sweep[i - 1].log_rho.log());
  }
}

class SmallNoiseSlope : public ::testing::TestWithParam<int> {};

TEST_P(SmallNoiseSlope, SlopeEqualsObservedDimension) {
  const int k = GetParam();
  Stream s(4, static_cast<std::uint64_t>(k));
  const auto base = random_problem(5, k, s);
  const auto sweep = noise_sweep(base, log_grid(1.0, 1e-8, 12));
  const SlopeFit fit = noise_slope(sweep);
  EXPECT_NEAR(fit.slope, k, 0.02 * k);
  EXPECT_EQ(fit.points, 6u);
}

INSTANTIATE_TEST_SUITE_P(K, SmallNoiseSlope, ::testing::Values(1, 2, 4, 5));

class PriorSlope : public ::testing::TestWithParam<std::pair<int, int>> {};

// The exponent is the rank k of A; it equals d for square designs.
TEST_P(PriorSlope, SlopeEqualsRank) {
  const auto [d, k] = GetParam();
  Stream s(5, static_cast<std::uint64_t>(10 * d + k));
  const auto base = random_problem(d, k, s);
  const auto sweep = prior_sweep(base, log_grid(1.0, 1e8, 12));
  EXPECT_NEAR(prior_slope(sweep).slope, k, 0.02 * k);
}

INSTANTIATE_TEST_SUITE_P(DK, PriorSlope,
                         ::testing::Values(std::pair{1, 1}, std::pair{4, 4}, std::pair{5, 5},
                                           std::pair{5, 2}));

TEST(SlopeFit, TwoPointsHaveNoStandardError) {
  const std::vector<double> x = {0.0, 1.0}, y = {1.0, 3.0};
  const SlopeFit fit = fit_asymptotic_slope(x, y);
  EXPECT_DOUBLE_EQ(fit.slope, 2.0);
  EXPECT_TRUE(std::isnan(fit.std_error));
  EXPECT_THROW(fit_asymptotic_slope(std::vector<double>{1.0}, std::vector<double>{1.0}),
               std::invalid_argument);
}

TEST(SlopeFit, UsesLastHalfOnly) {
  std::vector<double> x, y;
  for (int i = 0; i < 10; ++i) {
    x.push_back(i);
    y.push_back(i < 5 ? 100.0 * i : 3.0 * i + 1.0);
  }
  const SlopeFit fit = fit_asymptotic_slope(x, y);
  EXPECT_NEAR(fit.slope, 3.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-12);
  EXPECT_NEAR(fit.std_error, 0.0, 1e-12);
}

TEST(LogGrid, EndpointsAndSpacing) {
  const auto g = log_grid(1.0, 1e-6, 13);
  ASSERT_EQ(g.size(), 13u);
  EXPECT_EQ(g.front(), 1.0);
  EXPECT_EQ(g.back(), 1e-6);
  EXPECT_NEAR(g[1], std::pow(10.0, -0.5), 1e-15);
  EXPECT_THROW(log_grid(0.0, 1.0, 3), std::invalid_argument);
}

TEST(RandomProblem, DeterministicFromStream) {
  Stream a(6, 1), b(6, 1);
  const auto p = random_problem(3, 2, a), q = random_problem(3, 2, b);
  EXPECT_EQ(p.design(), q.design());
  EXPECT_EQ(p.data(), q.data());
}

}  // namespace
