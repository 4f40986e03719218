#include "islimits/filtering.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <string>

#include "islimits/errors.hpp"
#include "islimits/parallel.hpp"

namespace islimits {

namespace {

double operator_norm(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues().maxCoeff();
}

}  // namespace

OneStepFilterModel::OneStepFilterModel(Matrix dynamics, Matrix observation, Matrix initial_cov,
                                       Matrix dynamics_cov, Matrix obs_cov, Vector data)
    : m_(std::move(dynamics)),
      h_(std::move(observation)),
      p_(symmetrize(initial_cov)),
      q_(symmetrize(dynamics_cov)),
      r_(symmetrize(obs_cov)),
      y_(std::move(data)) {
  const auto d = m_.rows(), k = h_.rows();
  if (m_.cols() != d) throw std::invalid_argument("dynamics M must be square");
  if (h_.cols() != d) throw std::invalid_argument("observation H must be k x d");
  if (k > d) throw std::invalid_argument("filter model requires k <= d");
  if (p_.rows() != d || p_.cols() != d || q_.rows() != d || q_.cols() != d) {
    throw std::invalid_argument("P and Q must be d x d");
  }
  if (r_.rows() != k || r_.cols() != k) throw std::invalid_argument("R must be k x k");
  if (y_.size() != k) throw std::invalid_argument("data must have length k");
  check_full_rank(m_, "dynamics M");
  check_full_rank(h_, "observation H");
  cholesky_lower(p_, "initial covariance P");
  cholesky_lower(q_, "dynamics covariance Q");
  cholesky_lower(r_, "observation covariance R");
}

OneStepFilterModel OneStepFilterModel::with_obs_noise_scale(double r) const {
  if (!(r > 0.0)) throw std::invalid_argument("observation noise scale must be positive");
  return {m_, h_, p_, q_, r * r * r_, y_};
}

OneStepFilterModel OneStepFilterModel::with_data(Vector data) const {
  return {m_, h_, p_, q_, r_, std::move(data)};
}

LinearGaussianInverseProblem standard_problem(const OneStepFilterModel& fm) {
  const Matrix& m = fm.dynamics();
  return {fm.observation(), fm.obs_cov(),
          m * fm.initial_cov() * m.transpose() + fm.dynamics_cov(), fm.data()};
}

LinearGaussianInverseProblem optimal_problem(const OneStepFilterModel& fm) {
  const Matrix& h = fm.observation();
  return {h * fm.dynamics(), h * fm.dynamics_cov() * h.transpose() + fm.obs_cov(),
          fm.initial_cov(), fm.data()};
}

ProposalComparison compare_proposals(const OneStepFilterModel& fm) {
  const auto std_ip = standard_problem(fm);
  const auto opt_ip = optimal_problem(fm);
  const auto post_std = posterior(std_ip);
  const auto post_opt = posterior(opt_ip);
  ProposalComparison out;
  out.log_rho_std = log_rho_posterior_prior(std_ip);
  out.log_rho_opt = log_rho_posterior_prior(opt_ip);
  out.s_discrepancy = operator_norm(post_std.innovation_cov - post_opt.innovation_cov) /
                      operator_norm(post_std.innovation_cov);
  return out;
}

std::vector<SmallNoiseRow> small_noise_study(const OneStepFilterModel& fm,
                                             std::span<const double> rs, int threads) {
  std::vector<SmallNoiseRow> rows(rs.size());
  parallel::for_each_index(static_cast<std::int64_t>(rs.size()), threads, [&](std::int64_t i) {
    const double r = rs[static_cast<std::size_t>(i)];
    const auto scaled = fm.with_obs_noise_scale(r);
    rows[static_cast<std::size_t>(i)] = {r, log_rho_posterior_prior(standard_problem(scaled)),
                                         log_rho_posterior_prior(optimal_problem(scaled))};
  });
  return rows;
}

LogScalar optimal_small_noise_limit(const OneStepFilterModel& fm) {
  const Matrix& h = fm.observation();
  const LinearGaussianInverseProblem limit(h * fm.dynamics(),
                                           h * fm.dynamics_cov() * h.transpose(),
                                           fm.initial_cov(), fm.data());
  return log_rho_posterior_prior(limit);
}

double lambda_standard(double h, double m, double p, double q, double r) {
  return (h * h * m * m * p * p + h * h * q * q) / (r * r);
}

double lambda_optimal(double h, double m, double p, double q, double r) {
  return h * h * m * m * p * p / (h * h * q * q + r * r);
}

std::vector<DiagonalCriteriaRow> diagonal_filter_criteria(const DiagonalFilterSequences& seq,
                                                          std::size_t d_max) {
  if (d_max < 1) throw std::invalid_argument("diagonal_filter_criteria: d_max >= 1");
  if (!seq.h || !seq.m || !seq.p || !seq.q || !seq.r) {
    throw std::invalid_argument("diagonal_filter_criteria: all five sequences are required");
  }
  std::vector<DiagonalCriteriaRow> rows;
  rows.reserve(d_max);
  DiagonalCriteriaRow acc;
  for (std::size_t i = 1; i <= d_max; ++i) {
    const double h = seq.h(i), m = seq.m(i), p = seq.p(i), q = seq.q(i), r = seq.r(i);
    if (h == 0.0 || m == 0.0) {
      throw FullRankViolation("h_" + std::to_string(i) + " and m_" + std::to_string(i) +
                              " must be nonzero");
    }
    if (p == 0.0 || q == 0.0 || r == 0.0) {
      throw NotPositiveDefinite("p_" + std::to_string(i) + ", q_" + std::to_string(i) +
                                " and r_" + std::to_string(i) + " must be nonzero");
    }
    acc.d = i;
    acc.tau_std += lambda_standard(h, m, p, q, r);
    acc.tau_opt += lambda_optimal(h, m, p, q, r);
    rows.push_back(acc);
  }
  return rows;
}

Vector draw_filter_data(const OneStepFilterModel& fm, Stream& stream) {
  const auto d = fm.state_dim(), k = fm.obs_dim();
  const Gaussian v0_law(Vector::Zero(d), fm.initial_cov());
  const Gaussian xi_law(Vector::Zero(d), fm.dynamics_cov());
  const Gaussian zeta_law(Vector::Zero(k), fm.obs_cov());
  Vector v0(d), xi(d), zeta(k);
  v0_law.sample_into(stream, v0);
  xi_law.sample_into(stream, xi);
  zeta_law.sample_into(stream, zeta);
  return fm.observation() * (fm.dynamics() * v0 + xi) + zeta;
}

OneStepFilterModel random_filter_model(Eigen::Index d, Eigen::Index k, Stream& stream) {
  Matrix m = random_matrix(d, d, stream);
  Matrix h = random_matrix(k, d, stream);
  Matrix p = random_spd(d, stream);
  Matrix q = random_spd(d, stream);
  Matrix r = random_spd(k, stream);
  OneStepFilterModel fm(std::move(m), std::move(h), std::move(p), std::move(q), std::move(r),
                        Vector::Zero(k));
  Vector y = draw_filter_data(fm, stream);
  return fm.with_data(std::move(y));
}

}  // namespace islimits
