#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "islimits/gaussian.hpp"
#include "islimits/log_scalar.hpp"
#include "islimits/rng.hpp"

namespace islimits {

using LogDensity = std::function<double(const Eigen::Ref<const Vector>&)>;
using TestFunction = std::function<double(const Eigen::Ref<const Vector>&)>;

/// log of max-shifted sum: log sum_i exp(v_i). Returns -inf for an empty or
/// all -inf input.
double log_sum_exp(const Eigen::Ref<const Vector>& v);

/// log g(u) = log target(u) - log proposal(u) for two Gaussians, i.e. the
/// normalized density dmu/dpi. Autonormalization makes the absolute level
/// irrelevant, but keeping it normalized lets the same object feed the
/// threshold test of the necessary-sample-size argument.
class GaussianDensityRatio {
 public:
  GaussianDensityRatio(Gaussian target, Gaussian proposal);

  double operator()(const Eigen::Ref<const Vector>& u) const;

  const Gaussian& target() const { return target_; }
  const Gaussian& proposal() const { return proposal_; }

  /// log g at u = m_p + L_p z for each column z of `z`, using
  /// log g = |z|^2/2 - |B z + b|^2/2 + c with B = L_t^{-1} L_p.
  Vector from_standard_normals(const Matrix& z) const;

 private:
  Gaussian target_;
  Gaussian proposal_;
  double log_norm_ = 0.0;
  Matrix whitened_chol_;
  Vector whitened_shift_;
};

/// N proposal draws with their unnormalized log-densities. Normalized weights
/// are cached at construction with the log-sum-exp shift.
class WeightedEnsemble {
 public:
  /// Throws DegenerateWeights when every log_g is -inf.
  WeightedEnsemble(Matrix particles, Vector log_g);

  Eigen::Index size() const { return log_g_.size(); }
  Eigen::Index dim() const { return particles_.rows(); }
  const Matrix& particles() const { return particles_; }
  const Vector& log_g() const { return log_g_; }
  const Vector& weights() const { return weights_; }
  /// log sum_n g(u^(n)).
  double log_total() const { return log_total_; }

 private:
  Matrix particles_;
  Vector log_g_;
  Vector weights_;
  double log_total_ = 0.0;
};

WeightedEnsemble build_ensemble(const Gaussian& proposal, const LogDensity& log_g,
                                Eigen::Index n, Stream& stream);

/// sum_n w^(n) phi(u^(n)).
double estimate(const WeightedEnsemble& ens, const TestFunction& phi);

struct ISDiagnostics {
  double ess = 0.0;
  double max_weight = 0.0;
  /// log[(mean g^2) / (mean g)^2].
  LogScalar rho_hat;
  Eigen::Index n = 0;
};

ISDiagnostics diagnostics(const WeightedEnsemble& ens);

/// Same quantities from the log-densities alone.
ISDiagnostics diagnostics_from_log_weights(const Eigen::Ref<const Vector>& log_g);

/// The log-densities that build_ensemble would produce for the same stream,
/// without storing the particles.
Vector sample_log_weights(const Gaussian& proposal, const LogDensity& log_g, Eigen::Index n,
                          Stream& stream);

/// Same draws as sample_log_weights(ratio.proposal(), ratio, n, stream), with
/// log g evaluated in blocks through from_standard_normals. Values agree up to
/// rounding.
Vector sample_log_weights(const GaussianDensityRatio& ratio, Eigen::Index n, Stream& stream);

/// Weight diagnostics for R independent ensembles of size n drawn from the
/// ratio's proposal. Replicate r uses Stream(seed, replicate_stream_id(cell, r)).
std::vector<ISDiagnostics> replicate_diagnostics(const GaussianDensityRatio& ratio,
                                                 std::int64_t n, int replicates,
                                                 std::uint64_t seed, std::uint64_t cell,
                                                 int threads = 0);

/// Serial reference for replicate_diagnostics.
std::vector<ISDiagnostics> replicate_diagnostics_serial(const GaussianDensityRatio& ratio,
                                                        std::int64_t n, int replicates,
                                                        std::uint64_t seed, std::uint64_t cell);

/// Indicator 1{g_hat <= alpha * rho} acting on log g_hat, where g_hat is the
/// normalized density.
std::function<double(double)> necessary_test_function(LogScalar rho, double alpha);

/// P_{U ~ target}(log g_hat(U) <= log_threshold). Exact (normal CDF of the
/// quadratic's root intervals) in one dimension; otherwise direct sampling
/// from the target with `mc_draws` draws.
double indicator_probability(const GaussianDensityRatio& ratio, double log_threshold,
                             std::uint64_t seed = 0x5eed, std::int64_t mc_draws = 10'000'000,
                             int threads = 0);

/// Monte Carlo estimates of pi(g) and pi(g^2) in log scale.
struct MonteCarloMoments {
  LogScalar log_mean_g;
  LogScalar log_mean_g2;
  std::int64_t n = 0;
  LogScalar rho_hat() const { return LogScalar(log_mean_g2.log() - 2.0 * log_mean_g.log()); }
};

/// Chunked kernel: chunk c draws from Stream(seed, c). Partial log-sums are
/// combined in chunk order, so the result is independent of `threads`.
MonteCarloMoments mc_moments(const Gaussian& proposal, const LogDensity& log_g, std::int64_t n,
                             std::uint64_t seed, int threads = 0,
                             std::int64_t chunk_size = 1 << 16);

/// Serial reference for mc_moments; bit-identical output.
MonteCarloMoments mc_moments_serial(const Gaussian& proposal, const LogDensity& log_g,
                                    std::int64_t n, std::uint64_t seed,
                                    std::int64_t chunk_size = 1 << 16);

/// N = round(rho^exponent) with a floor of 2.
std::int64_t sample_size_from_rho(LogScalar rho, double exponent);

/// Signed errors mu^N(phi_j) - mu(phi_j) for R independent ensembles of size
/// n. Replicate r uses Stream(seed, replicate_stream_id(cell, r)). Result is
/// R x J.
Matrix replicate_errors(const GaussianDensityRatio& ratio, std::span<const TestFunction> phis,
                        std::span<const double> exact, std::int64_t n, int replicates,
                        std::uint64_t seed, std::uint64_t cell, int threads = 0);

/// Serial reference for replicate_errors.
Matrix replicate_errors_serial(const GaussianDensityRatio& ratio,
                               std::span<const TestFunction> phis, std::span<const double> exact,
                               std::int64_t n, int replicates, std::uint64_t seed,
                               std::uint64_t cell);

struct MeanAndError {
  double mean = 0.0;
  /// Standard error of the mean; NaN for fewer than two samples.
  double std_error = 0.0;
};

MeanAndError mean_and_error(const Eigen::Ref<const Vector>& samples);

/// One member of a family {(mu_theta, pi_theta)} with its exact rho.
struct DichotomyMember {
  double theta = 0.0;
  GaussianDensityRatio ratio;
  LogScalar rho;
};

struct DichotomyOptions {
  double delta = 0.5;
  double alpha = 0.5;
  int replicates = 400;
  std::int64_t max_particles = 100'000'000;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct DichotomyBranch {
  double exponent = 0.0;
  std::int64_t n = 0;
  /// |mu^N(phi) - mu(phi)| per replicate.
  std::vector<double> errors;
  /// Whether |mu^N(phi) - mu(phi)| = P(g_hat(U) > alpha rho) held.
  std::vector<std::uint8_t> events;
  MeanAndError abs_error;
  MeanAndError squared_error;
  MeanAndError event_frequency;
};

struct DichotomyRecord {
  double theta = 0.0;
  LogScalar rho;
  /// mu(phi) = P(g_hat(U) <= alpha rho), U ~ target.
  double mu_phi = 0.0;
  DichotomyBranch plus;
  DichotomyBranch minus;
};

/// Runs both exponent branches N = rho^{1 +- delta} for each member with the
/// threshold test function. Throws BudgetExceeded when an N exceeds
/// options.max_particles.
std::vector<DichotomyRecord> dichotomy_trial(std::span<const DichotomyMember> family,
                                             const DichotomyOptions& options);

}  // namespace islimits
