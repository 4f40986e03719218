#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "islimits/gaussian.hpp"
#include "islimits/inverse_problem.hpp"
#include "islimits/log_scalar.hpp"

namespace islimits {

/// Coordinate-wise product of one-dimensional problems y_i = a_i u_i + eta_i,
/// eta_i ~ N(0, gamma2_i), u_i ~ N(0, sigma2_i). Each coordinate enters only
/// through lambda_i = a_i^2 sigma2_i / gamma2_i and z2_i = y_i^2 / (a_i^2 sigma2_i + gamma2_i).
class DiagonalProductModel {
 public:
  DiagonalProductModel(Vector a, Vector gamma2, Vector sigma2, Vector y);

  /// Model with a_i = sigma2_i = 1, gamma2_i = 1 / lambda_i and data chosen so
  /// that z2_i matches. Every lambda_i must be positive.
  static DiagonalProductModel from_lambda(const Vector& lambda, const Vector& z2);

  std::size_t size() const { return static_cast<std::size_t>(a_.size()); }
  const Vector& a() const { return a_; }
  const Vector& gamma2() const { return gamma2_; }
  const Vector& sigma2() const { return sigma2_; }
  const Vector& y() const { return y_; }
  const Vector& lambda() const { return lambda_; }
  const Vector& z2() const { return z2_; }

  /// First d coordinates.
  DiagonalProductModel prefix(std::size_t d) const;

  LinearGaussianInverseProblem to_inverse_problem() const;

 private:
  Vector a_, gamma2_, sigma2_, y_;
  Vector lambda_, z2_;
};

/// log of pi(g^ell) / pi(g)^ell for one coordinate:
///   (lambda+1)^{ell/2} / sqrt(ell lambda + 1) * exp((ell^2 - ell) lambda z2 / (2 (ell lambda + 1))).
LogScalar moment_ratio(double lambda, double z2, double ell);

/// log rho_d = sum_i log moment_ratio(lambda_i, z2_i, 2).
LogScalar log_rho_product(const DiagonalProductModel& m);

/// log E_z[rho_d] = sum_i log(lambda_i + 1), with z_i ~ N(0, 1).
LogScalar expected_log_rho_linear(const DiagonalProductModel& m);

/// log of the Hellinger integral pi(g^{1/2}) / pi(g)^{1/2} of the product.
double log_hellinger_product(const DiagonalProductModel& m);

/// log E_z[H] = sum_i [log 2 + log(lambda_i + 1)/4 - log(3 lambda_i + 4)/2].
double expected_log_hellinger(const DiagonalProductModel& m);

/// tau = sum_i lambda_i.
double intrinsic_dimension(const DiagonalProductModel& m);

// Overloads on raw (lambda, z2) sequences; these also accept lambda_i = 0,
// which the model type excludes.
LogScalar log_rho_product(const Vector& lambda, const Vector& z2);
double log_hellinger_product(const Vector& lambda, const Vector& z2);
double intrinsic_dimension(const Vector& lambda);
LogScalar expected_log_rho_linear(const Vector& lambda);
double expected_log_hellinger(const Vector& lambda);

struct EquivalenceRow {
  std::size_t d = 0;
  double tau = 0.0;
  double log_expected_rho = 0.0;
  double log_expected_hellinger = 0.0;
};

/// Truncation trajectory d = 1..d_max of tau_d, log E[rho_d] and log E[H_d]
/// for lambda_i = lambda_seq(i), i >= 1.
std::vector<EquivalenceRow> equivalence_report(const std::function<double(std::size_t)>& lambda_seq,
                                               std::size_t d_max);

/// Var[g_hat(U)] / rho^2 = pi(g_hat^3) / pi(g_hat^2)^2 - 1 for one coordinate.
double variance_ratio(double lambda, double z2);

}  // namespace islimits
