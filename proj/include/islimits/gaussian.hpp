#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "islimits/log_scalar.hpp"
#include "islimits/rng.hpp"

namespace islimits {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative pivot floor for positive-definiteness: every squared Cholesky
/// pivot must exceed kPdRelativeFloor * max(diag(cov)).
inline constexpr double kPdRelativeFloor = 1e-14;

/// (M + M^T) / 2.
Matrix symmetrize(const Matrix& m);

/// True when `m` (assumed symmetric) factors with every pivot above the
/// relative floor.
bool is_positive_definite(const Matrix& m);

/// Lower Cholesky factor of the symmetrized matrix. Throws NotPositiveDefinite.
Matrix cholesky_lower(const Matrix& m, const char* what = "matrix");

/// log det of a PD matrix via its Cholesky factor.
double log_det_pd(const Matrix& m);

/// Multivariate normal N(mean, cov). Immutable after construction; the
/// Cholesky factor and log-determinant are cached.
class Gaussian {
 public:
  Gaussian(Vector mean, const Matrix& cov);

  Eigen::Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  const Matrix& chol() const { return chol_; }
  double log_det() const { return log_det_; }

  double log_pdf(const Eigen::Ref<const Vector>& x) const;

  /// n draws as the columns of a dim x n matrix: mean + L z, z ~ N(0, I).
  Matrix sample(Stream& stream, Eigen::Index n) const;

  /// One draw written into `out`.
  void sample_into(Stream& stream, Eigen::Ref<Vector> out) const;

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
  double log_det_ = 0.0;
};

Gaussian make_gaussian(const Vector& mean, const Matrix& cov);

/// Fill `z` with i.i.d. standard normals drawn from `stream`.
void standard_normals(Stream& stream, Eigen::Ref<Vector> z);

/// log rho with rho = d_chi2(target || proposal) + 1 for two Gaussians of
/// equal dimension. With target N(m1, C) and proposal N(m2, S):
///
///   rho = |S| / sqrt(|2S - C| |C|) * exp((m1 - m2)^T (2S - C)^{-1} (m1 - m2))
///
/// and rho = +inf when 2S - C is not positive definite.
LogScalar chi2_rho_gaussians(const Gaussian& target, const Gaussian& proposal);

}  // namespace islimits
