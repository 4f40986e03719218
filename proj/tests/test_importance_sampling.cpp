#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "islimits/errors.hpp"
#include "islimits/importance_sampling.hpp"
#include "islimits/inverse_problem.hpp"
#include "oracles.hpp"

using namespace islimits;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Scalar model u ~ N(0, 1), y = u + eta, eta ~ N(0, 1/lambda).
GaussianDensityRatio scalar_ratio(double lambda, double y) {
  const LinearGaussianInverseProblem ip(Matrix::Identity(1, 1),
                                        Matrix::Constant(1, 1, 1.0 / lambda),
                                        Matrix::Identity(1, 1), Vector::Constant(1, y));
  return {posterior(ip).as_gaussian(), ip.prior()};
}

GaussianDensityRatio random_ratio(Eigen::Index d, Eigen::Index k, std::uint64_t seed) {
  Stream s(seed, 0);
  const auto ip = random_problem(d, k, s);
  return {posterior(ip).as_gaussian(), ip.prior()};
}

LogDensity as_density(const GaussianDensityRatio& r) {
  return [&r](const Eigen::Ref<const Vector>& u) { return r(u); };
}

TEST(LogSumExp, StableForLargeMagnitudes) {
  Vector v(3);
  v << 1000.0, 1000.0, -kInf;
  EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
  v << -1000.0, -1001.0, -1002.0;
  EXPECT_NEAR(log_sum_exp(v), -1000.0 + std::log(1.0 + std::exp(-1.0) + std::exp(-2.0)), 1e-12);
  EXPECT_EQ(log_sum_exp(Vector()), -kInf);
  EXPECT_EQ(log_sum_exp(Vector::Constant(2, -kInf)), -kInf);
}

TEST(DensityRatio, IsTargetOverProposalDensity) {
  const auto r = random_ratio(3, 2, 4);
  Vector u(3);
  u << 0.1, -0.4, 0.7;
  EXPECT_NEAR(r(u), r.target().log_pdf(u) - r.proposal().log_pdf(u), 1e-11);
}

TEST(DensityRatio, BlockEvaluationMatchesPointwise) {
  const auto r = random_ratio(4, 3, 5);
  Stream s(1, 2);
  Matrix z(4, 50);
  for (int j = 0; j < 50; ++j) {
    Vector col(4);
    standard_normals(s, col);
    z.col(j) = col;
  }
  const Vector block = r.from_standard_normals(z);
  for (int j = 0; j < 50; ++j) {
    const Vector u = r.proposal().mean() + r.proposal().chol() * z.col(j);
    EXPECT_NEAR(block[j], r(u), 1e-10 * (1.0 + std::abs(r(u))));
  }
}

TEST(Ensemble, WeightsNormalizedAndShiftInvariant) {
  Vector lg(4);
  lg << 0.0, 1.0, 2.0, -kInf;
  const WeightedEnsemble a(Matrix::Zero(1, 4), lg);
  const WeightedEnsemble b(Matrix::Zero(1, 4), (lg.array() + 700.0).matrix());
  EXPECT_NEAR(a.weights().sum(), 1.0, 1e-15);
  EXPECT_EQ(a.weights()[3], 0.0);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(a.weights()[i], b.weights()[i], 1e-15);
  EXPECT_NEAR(a.weights()[2] / a.weights()[1], std::exp(1.0), 1e-12);
}

TEST(Ensemble, DegenerateWeightsThrow) {
  EXPECT_THROW(WeightedEnsemble(Matrix::Zero(1, 3), Vector::Constant(3, -kInf)), DegenerateWeights);
  Vector nan_lg(2);
  nan_lg << 0.0, std::nan("");
  EXPECT_THROW(WeightedEnsemble(Matrix::Zero(1, 2), nan_lg), DegenerateWeights);
}

TEST(Diagnostics, EssIdentityAndBounds) {
  const auto r = random_ratio(3, 3, 6);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Stream s(seed, 1);
    const auto ens = build_ensemble(r.proposal(), as_density(r), 500, s);
    const ISDiagnostics d = diagnostics(ens);
    EXPECT_NEAR(d.ess, 500.0 * std::exp(-d.rho_hat.log()), 1e-9 * d.ess);
    EXPECT_NEAR(d.ess, 1.0 / ens.weights().squaredNorm(), 1e-12 * d.ess);
    EXPECT_GE(d.ess, 1.0);
    EXPECT_LE(d.ess, 500.0);
    EXPECT_GE(d.max_weight, 1.0 / 500.0 - 1e-15);
    EXPECT_LE(d.max_weight, 1.0);
    const ISDiagnostics from_logs = diagnostics_from_log_weights(ens.log_g());
    EXPECT_NEAR(from_logs.ess, d.ess, 1e-9 * d.ess);
    EXPECT_NEAR(from_logs.max_weight, d.max_weight, 1e-12);
  }
}

TEST(Diagnostics, ProposalEqualsTargetGivesUniformWeights) {
  const Gaussian g(Vector::Zero(2), Matrix::Identity(2, 2));
  const GaussianDensityRatio trivial(g, g);
  const auto diag = replicate_diagnostics(trivial, 10, 1, 1, 0, 1);
  ASSERT_EQ(diag.size(), 1u);
  EXPECT_NEAR(diag[0].max_weight, 0.1, 1e-15);
  EXPECT_NEAR(diag[0].ess, 10.0, 1e-12);
}

TEST(Sampling, LogWeightsMatchEnsembleAndConsumeSameDraws) {
  const auto r = random_ratio(3, 2, 7);
  Stream a(3, 4), b(3, 4), c(3, 4);
  const auto ens = build_ensemble(r.proposal(), as_density(r), 257, a);
  const Vector generic = sample_log_weights(r.proposal(), as_density(r), 257, b);
  const Vector block = sample_log_weights(r, 257, c);
  EXPECT_EQ(ens.log_g(), generic);
  for (int i = 0; i < 257; ++i) EXPECT_NEAR(block[i], generic[i], 1e-10 * (1 + std::abs(generic[i])));
  const std::uint64_t next_a = a(), next_b = b(), next_c = c();
  EXPECT_EQ(next_a, next_b);
  EXPECT_EQ(next_b, next_c);
}

TEST(Sampling, BlockPathCrossesBlockBoundaries) {
  const auto r = random_ratio(2, 2, 8);
  Stream a(1, 1), b(1, 1);
  const Vector whole = sample_log_weights(r, 5000, a);
  const Vector generic = sample_log_weights(r.proposal(), as_density(r), 5000, b);
  EXPECT_LT((whole - generic).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Estimate, RecoversPosteriorMean) {
  const auto r = scalar_ratio(4.0, 1.0);
  Stream s(12, 0);
  const auto ens = build_ensemble(r.proposal(), as_density(r), 200'000, s);
  EXPECT_NEAR(estimate(ens, [](const Eigen::Ref<const Vector>&) { return 1.0; }), 1.0, 1e-12);
  const double m = estimate(ens, [](const Eigen::Ref<const Vector>& u) { return u[0]; });
  EXPECT_NEAR(m, r.target().mean()[0], 0.01);
}

TEST(MonteCarlo, ParallelMatchesSerialBitwise) {
  const auto r = random_ratio(3, 3, 9);
  const auto serial = mc_moments_serial(r.proposal(), as_density(r), 300'000, 5, 10'000);
  for (int threads : {1, 2, 4, 8}) {
    const auto par = mc_moments(r.proposal(), as_density(r), 300'000, 5, threads, 10'000);
    EXPECT_EQ(par.log_mean_g.log(), serial.log_mean_g.log()) << threads;
    EXPECT_EQ(par.log_mean_g2.log(), serial.log_mean_g2.log()) << threads;
  }
}

TEST(MonteCarlo, RhoHatApproachesExactRho) {
  const auto r = scalar_ratio(2.0, 0.5);
  const auto mc = mc_moments(r.proposal(), as_density(r), 2'000'000, 17);
  const double exact = chi2_rho_gaussians(r.target(), r.proposal()).log();
  EXPECT_NEAR(mc.rho_hat().log(), exact, 0.01);
  // pi(g) = 1 for the normalized density.
  EXPECT_NEAR(mc.log_mean_g.log(), 0.0, 0.005);
}

TEST(Replicates, ParallelMatchesSerialBitwise) {
  const auto r = random_ratio(2, 1, 10);
  const auto serial = replicate_diagnostics_serial(r, 300, 37, 4, 3);
  for (int threads : {1, 3, 8}) {
    const auto par = replicate_diagnostics(r, 300, 37, 4, 3, threads);
    ASSERT_EQ(par.size(), serial.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      EXPECT_EQ(par[i].max_weight, serial[i].max_weight);
      EXPECT_EQ(par[i].ess, serial[i].ess);
    }
  }
  const std::array<TestFunction, 2> phis = {
      [](const Eigen::Ref<const Vector>& u) { return std::cos(u[0]); },
      [](const Eigen::Ref<const Vector>& u) { return std::sin(u[1]); }};
  const std::array<double, 2> exact = {0.0, 0.0};
  const Matrix es = replicate_errors_serial(r, phis, exact, 100, 21, 2, 9);
  EXPECT_EQ(replicate_errors(r, phis, exact, 100, 21, 2, 9, 8), es);
}

TEST(Indicator, ExactOneDimensionalMatchesGridOracle) {
  for (double lambda : {0.5, 3.0, 40.0}) {
    for (double y : {0.0, 0.8, -2.0}) {
      const auto r = scalar_ratio(lambda, y);
      for (double t : {-1.0, 0.0, 0.3, 1.2}) {
        const double m = r.target().mean()[0], c = r.target().cov()(0, 0);
        const double sd = std::sqrt(c);
        // Midpoint rule on a fine grid over the target's bulk.
        const int n = 400'000;
        const double a = m - 12.0 * sd, h = 24.0 * sd / n;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
          const double u = a + (i + 0.5) * h;
          if (r(Vector::Constant(1, u)) <= t) acc += oracle::normal_pdf(u, m, c) * h;
        }
        EXPECT_NEAR(indicator_probability(r, t), acc, 2e-5)
            << "lambda " << lambda << " y " << y << " t " << t;
      }
    }
  }
}

TEST(Indicator, MonteCarloPathAgreesWithDirectSampling) {
  const auto r = random_ratio(2, 2, 11);
  const double t = 0.2;
  const double p = indicator_probability(r, t, 3, 2'000'000, 0);
  Stream s(99, 0);
  const Matrix x = r.target().sample(s, 200'000);
  double hits = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) hits += r(x.col(j)) <= t ? 1.0 : 0.0;
  const double q = hits / static_cast<double>(x.cols());
  EXPECT_NEAR(p, q, 5.0 * std::sqrt(q * (1 - q) / x.cols()) + 1e-4);
  EXPECT_EQ(p, indicator_probability(r, t, 3, 2'000'000, 1));
}

TEST(NecessaryTestFunction, ThresholdAndValidation) {
  const auto phi = necessary_test_function(LogScalar(std::log(8.0)), 0.5);
  EXPECT_EQ(phi(std::log(4.0) - 1e-9), 1.0);
  EXPECT_EQ(phi(std::log(4.0) + 1e-9), 0.0);
  EXPECT_THROW(necessary_test_function(LogScalar(1.0), 0.0), std::invalid_argument);
  EXPECT_THROW(necessary_test_function(LogScalar(1.0), 1.0), std::invalid_argument);
  EXPECT_THROW(necessary_test_function(LogScalar::infinity(), 0.5), std::invalid_argument);
}

TEST(SampleSize, RoundsWithFloorAndCap) {
  EXPECT_EQ(sample_size_from_rho(LogScalar(0.0), 1.5), 2);
  EXPECT_EQ(sample_size_from_rho(LogScalar(std::log(100.0)), 1.5), 1000);
  EXPECT_EQ(sample_size_from_rho(LogScalar(std::log(100.0)), 0.5), 10);
  EXPECT_THROW(sample_size_from_rho(LogScalar::infinity(), 1.0), BudgetExceeded);
  EXPECT_THROW(sample_size_from_rho(LogScalar(100.0), 1.5), BudgetExceeded);
}

TEST(Dichotomy, BudgetCheckedBeforeSampling) {
  std::vector<DichotomyMember> family;
  const auto r = scalar_ratio(1e6, 0.0);
  family.push_back({1e6, r, chi2_rho_gaussians(r.target(), r.proposal())});
  DichotomyOptions opt;
  opt.max_particles = 1000;
  EXPECT_THROW(dichotomy_trial(family, opt), BudgetExceeded);
}

TEST(Dichotomy, EventMatchesAllParticlesBelowThreshold) {
  std::vector<DichotomyMember> family;
  const auto r = scalar_ratio(1e4, 0.0);
  family.push_back({1e4, r, chi2_rho_gaussians(r.target(), r.proposal())});
  DichotomyOptions opt;
  opt.replicates = 200;
  opt.threads = 2;
  const auto rec = dichotomy_trial(family, opt).front();
  // N = rho^{1/2} is far below alpha rho, so the event is common.
  EXPECT_GT(rec.minus.event_frequency.mean, 0.5);
  for (std::size_t i = 0; i < rec.minus.errors.size(); ++i) {
    if (rec.minus.events[i]) EXPECT_NEAR(rec.minus.errors[i], 1.0 - rec.mu_phi, 1e-12);
  }
  const double bound = 1.0 - static_cast<double>(rec.minus.n) / (0.5 * std::exp(rec.rho.log()));
  EXPECT_GE(rec.minus.event_frequency.mean, bound - 3.0 * std::sqrt(bound * (1 - bound) / 200));
}

TEST(MeanAndError, KnownValues) {
  Vector v(4);
  v << 1.0, 2.0, 3.0, 4.0;
  const auto me = mean_and_error(v);
  EXPECT_DOUBLE_EQ(me.mean, 2.5);
  EXPECT_NEAR(me.std_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_TRUE(std::isnan(mean_and_error(Vector::Ones(1)).std_error));
}

}  // namespace
