#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "islimits/gaussian.hpp"
#include "islimits/log_scalar.hpp"
#include "islimits/rng.hpp"

namespace islimits {

/// Relative singular-value threshold for the full-rank checks.
inline constexpr double kFullRankRelativeTol = 1e-10;

/// Throws FullRankViolation unless sigma_min > tol * sigma_max.
void check_full_rank(const Matrix& m, const char* what);

/// Linear inverse problem y = A u + eta, eta ~ N(0, Gamma), prior u ~ N(0, Sigma),
/// in the underdetermined regime k <= d with A of full rank k.
class LinearGaussianInverseProblem {
 public:
  LinearGaussianInverseProblem(Matrix design, Matrix noise_cov, Matrix prior_cov, Vector data);

  const Matrix& design() const { return design_; }
  const Matrix& noise_cov() const { return noise_cov_; }
  const Matrix& prior_cov() const { return prior_cov_; }
  const Vector& data() const { return data_; }
  Eigen::Index data_dim() const { return design_.rows(); }
  Eigen::Index param_dim() const { return design_.cols(); }

  Gaussian prior() const;

  /// Same problem with noise covariance gamma^2 Gamma.
  LinearGaussianInverseProblem with_noise_scale(double gamma) const;
  /// Same problem with prior covariance sigma^2 Sigma.
  LinearGaussianInverseProblem with_prior_scale(double sigma) const;
  LinearGaussianInverseProblem with_data(Vector data) const;

 private:
  Matrix design_;
  Matrix noise_cov_;
  Matrix prior_cov_;
  Vector data_;
};

struct PosteriorSummary {
  Matrix innovation_cov;  // S = A Sigma A^T + Gamma
  Matrix gain;            // K = Sigma A^T S^{-1}
  Vector mean;            // m = K y
  Matrix cov;             // C = (I - K A) Sigma

  Gaussian as_gaussian() const { return Gaussian(mean, cov); }
};

PosteriorSummary posterior(const LinearGaussianInverseProblem& ip);

/// log rho for posterior vs prior:
///   rho = (|I + KA| |I - KA|)^{-1/2} exp(y^T K^T [(I + KA) Sigma]^{-1} K y).
LogScalar log_rho_posterior_prior(const LinearGaussianInverseProblem& ip);

struct SweepPoint {
  double scale = 0.0;
  LogScalar log_rho;
};

/// log rho of the problem with noise covariance gamma^2 Gamma for each gamma.
std::vector<SweepPoint> noise_sweep(const LinearGaussianInverseProblem& base,
                                    std::span<const double> gammas, int threads = 0);

/// log rho of the problem with prior covariance sigma^2 Sigma for each sigma.
std::vector<SweepPoint> prior_sweep(const LinearGaussianInverseProblem& base,
                                    std::span<const double> sigmas, int threads = 0);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// NaN when the fit uses exactly two points.
  double std_error = 0.0;
  std::size_t points = 0;
};

/// Least-squares line through (x_i, y_i) over the last half of the grid
/// (at least two points). Throws std::invalid_argument for fewer than two.
SlopeFit fit_asymptotic_slope(std::span<const double> x, std::span<const double> y);

/// Slope of log rho against log(1/gamma) for a noise sweep.
SlopeFit noise_slope(std::span<const SweepPoint> sweep);
/// Slope of log rho against log(sigma) for a prior sweep.
SlopeFit prior_slope(std::span<const SweepPoint> sweep);

/// Draw y = A u + eta with u ~ N(0, Sigma) and eta ~ N(0, Gamma).
Vector draw_data(const Matrix& design, const Matrix& noise_cov, const Matrix& prior_cov,
                 Stream& stream);

/// G G^T + 0.1 I with G having i.i.d. standard normal entries.
Matrix random_spd(Eigen::Index n, Stream& stream);

/// Matrix with i.i.d. standard normal entries.
Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Stream& stream);

/// Random full-rank problem with data drawn from the model.
LinearGaussianInverseProblem random_problem(Eigen::Index d, Eigen::Index k, Stream& stream);

/// Log-spaced grid from `first` to `last` inclusive.
std::vector<double> log_grid(double first, double last, std::size_t points);

}  // namespace islimits
