#include "islimits/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "islimits/errors.hpp"

namespace islimits {

namespace {

// Cholesky with the relative pivot floor; returns false on failure.
bool try_cholesky(const Matrix& sym, Matrix& lower) {
  if (sym.rows() == 0) {
    lower.resize(0, 0);
    return true;
  }
  const double max_diag = sym.diagonal().maxCoeff();
  if (!(max_diag > 0.0) || !std::isfinite(max_diag)) return false;
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  const double floor = kPdRelativeFloor * max_diag;
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    const double pivot = lower(i, i);
    if (!std::isfinite(pivot) || pivot * pivot <= floor) return false;
  }
  return true;
}

}  // namespace

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  Matrix lower;
  return try_cholesky(symmetrize(m), lower);
}

Matrix cholesky_lower(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw NotPositiveDefinite(std::string(what) + " is not square");
  }
  Matrix lower;
  if (!try_cholesky(symmetrize(m), lower)) {
    throw NotPositiveDefinite(std::string(what) + " is not positive definite");
  }
  return lower;
}

double log_det_pd(const Matrix& m) {
  const Matrix lower = cholesky_lower(m);
  return 2.0 * lower.diagonal().array().log().sum();
}

Gaussian::Gaussian(Vector mean, const Matrix& cov) : mean_(std::move(mean)) {
  if (cov.rows() != cov.cols() || cov.rows() != mean_.size()) {
    throw std::invalid_argument("Gaussian: mean and covariance dimensions disagree");
  }
  cov_ = symmetrize(cov);
  chol_ = cholesky_lower(cov_, "covariance");
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

double Gaussian::log_pdf(const Eigen::Ref<const Vector>& x) const {
  const Vector r = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
  const double d = static_cast<double>(dim());
  return -0.5 * r.squaredNorm() - 0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det_);
}

void standard_normals(Stream& stream, Eigen::Ref<Vector> z) {
  NormalDistribution normal;
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(stream);
}

void Gaussian::sample_into(Stream& stream, Eigen::Ref<Vector> out) const {
  Vector z(dim());
  standard_normals(stream, z);
  out = mean_ + chol_.triangularView<Eigen::Lower>() * z;
}

Matrix Gaussian::sample(Stream& stream, Eigen::Index n) const {
  if (n < 1) throw std::invalid_argument("Gaussian::sample: n must be >= 1");
  Matrix z(dim(), n);
  NormalDistribution normal;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < dim(); ++i) z(i, j) = normal(stream);
  }
  Matrix draws = chol_.triangularView<Eigen::Lower>() * z;
  draws.colwise() += mean_;
  return draws;
}

Gaussian make_gaussian(const Vector& mean, const Matrix& cov) { return Gaussian(mean, cov); }

LogScalar chi2_rho_gaussians(const Gaussian& target, const Gaussian& proposal) {
  if (target.dim() != proposal.dim()) {
    throw std::invalid_argument("chi2_rho_gaussians: dimension mismatch");
  }
  const Matrix two_s_minus_c = symmetrize(2.0 * proposal.cov() - target.cov());
  Matrix lower;
  if (!try_cholesky(two_s_minus_c, lower)) return LogScalar::infinity();

  const double log_det_diff = 2.0 * lower.diagonal().array().log().sum();
  const Vector delta = target.mean() - proposal.mean();
  const Vector r = lower.triangularView<Eigen::Lower>().solve(delta);
  return LogScalar(proposal.log_det() - 0.5 * (log_det_diff + target.log_det()) +
                   r.squaredNorm());
}

}  // namespace islimits
