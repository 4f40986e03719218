#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "islimits/gaussian.hpp"
#include "islimits/inverse_problem.hpp"
#include "islimits/log_scalar.hpp"
#include "islimits/rng.hpp"

namespace islimits {

/// One filtering step
///   v1 = M v0 + xi,  v0 ~ N(0, P),  xi ~ N(0, Q)
///   y  = H v1 + zeta, zeta ~ N(0, R)
/// with M (d x d) and H (k x d) of full rank.
class OneStepFilterModel {
 public:
  OneStepFilterModel(Matrix dynamics, Matrix observation, Matrix initial_cov, Matrix dynamics_cov,
                     Matrix obs_cov, Vector data);

  const Matrix& dynamics() const { return m_; }
  const Matrix& observation() const { return h_; }
  const Matrix& initial_cov() const { return p_; }
  const Matrix& dynamics_cov() const { return q_; }
  const Matrix& obs_cov() const { return r_; }
  const Vector& data() const { return y_; }
  Eigen::Index state_dim() const { return m_.rows(); }
  Eigen::Index obs_dim() const { return h_.rows(); }

  /// Same model with observation noise r^2 R.
  OneStepFilterModel with_obs_noise_scale(double r) const;
  OneStepFilterModel with_data(Vector data) const;

 private:
  Matrix m_, h_, p_, q_, r_;
  Vector y_;
};

/// Standard (bootstrap) proposal: A = H, Gamma = R, Sigma = M P M^T + Q.
LinearGaussianInverseProblem standard_problem(const OneStepFilterModel& fm);

/// Optimal proposal, reduced to v0: A = H M, Gamma = H Q H^T + R, Sigma = P.
LinearGaussianInverseProblem optimal_problem(const OneStepFilterModel& fm);

struct ProposalComparison {
  LogScalar log_rho_std;
  LogScalar log_rho_opt;
  /// ||S_std - S_opt||_2 / ||S_std||_2.
  double s_discrepancy = 0.0;
};

ProposalComparison compare_proposals(const OneStepFilterModel& fm);

struct SmallNoiseRow {
  double r = 0.0;
  LogScalar log_rho_std;
  LogScalar log_rho_opt;
};

/// Sweep of both proposals with observation noise r^2 R.
std::vector<SmallNoiseRow> small_noise_study(const OneStepFilterModel& fm,
                                             std::span<const double> rs, int threads = 0);

/// log rho of the optimal proposal in the r -> 0 limit (Gamma_opt -> H Q H^T).
LogScalar optimal_small_noise_limit(const OneStepFilterModel& fm);

/// Per-coordinate standard deviations h_i, m_i, p_i, q_i, r_i for i >= 1.
struct DiagonalFilterSequences {
  std::function<double(std::size_t)> h, m, p, q, r;
};

double lambda_standard(double h, double m, double p, double q, double r);
double lambda_optimal(double h, double m, double p, double q, double r);

struct DiagonalCriteriaRow {
  std::size_t d = 0;
  double tau_std = 0.0;
  double tau_opt = 0.0;
};

/// Partial sums of lambda_std^(i) and lambda_opt^(i) for d = 1..d_max.
/// Throws NotPositiveDefinite if any p_i, q_i or r_i is zero.
std::vector<DiagonalCriteriaRow> diagonal_filter_criteria(const DiagonalFilterSequences& seq,
                                                          std::size_t d_max);

/// Draw v0 -> v1 -> y from the model's generative process (data ignored).
Vector draw_filter_data(const OneStepFilterModel& fm, Stream& stream);

/// Random model: M, H with i.i.d. N(0,1) entries; P, Q, R = G G^T + 0.1 I;
/// y drawn from the model.
OneStepFilterModel random_filter_model(Eigen::Index d, Eigen::Index k, Stream& stream);

}  // namespace islimits
