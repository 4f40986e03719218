#include "islimits/diagonal_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace islimits {

DiagonalProductModel::DiagonalProductModel(Vector a, Vector gamma2, Vector sigma2, Vector y)
    : a_(std::move(a)), gamma2_(std::move(gamma2)), sigma2_(std::move(sigma2)), y_(std::move(y)) {
  const auto d = a_.size();
  if (gamma2_.size() != d || sigma2_.size() != d || y_.size() != d) {
    throw std::invalid_argument("DiagonalProductModel: sequence lengths differ");
  }
  if ((a_.array() == 0.0).any()) throw std::invalid_argument("DiagonalProductModel: a_i = 0");
  if (!(gamma2_.array() > 0.0).all() || !(sigma2_.array() > 0.0).all()) {
    throw std::invalid_argument("DiagonalProductModel: variances must be positive");
  }
  const Eigen::ArrayXd a2s2 = a_.array().square() * sigma2_.array();
  lambda_ = (a2s2 / gamma2_.array()).matrix();
  z2_ = (y_.array().square() / (a2s2 + gamma2_.array())).matrix();
}

DiagonalProductModel DiagonalProductModel::from_lambda(const Vector& lambda, const Vector& z2) {
  if (lambda.size() != z2.size()) throw std::invalid_argument("from_lambda: length mismatch");
  if (!(lambda.array() > 0.0).all()) throw std::invalid_argument("from_lambda: lambda_i <= 0");
  if ((z2.array() < 0.0).any()) throw std::invalid_argument("from_lambda: z2_i < 0");
  const Eigen::Index d = lambda.size();
  const Vector gamma2 = lambda.cwiseInverse();
  // z2 = y^2 / (1 + gamma2)
  const Vector y = (z2.array() * (1.0 + gamma2.array())).sqrt().matrix();
  return {Vector::Ones(d), gamma2, Vector::Ones(d), y};
}

DiagonalProductModel DiagonalProductModel::prefix(std::size_t d) const {
  if (d > size()) throw std::invalid_argument("prefix longer than model");
  const auto n = static_cast<Eigen::Index>(d);
  return {a_.head(n), gamma2_.head(n), sigma2_.head(n), y_.head(n)};
}

LinearGaussianInverseProblem DiagonalProductModel::to_inverse_problem() const {
  return {a_.asDiagonal().toDenseMatrix(), gamma2_.asDiagonal().toDenseMatrix(),
          sigma2_.asDiagonal().toDenseMatrix(), y_};
}

LogScalar moment_ratio(double lambda, double z2, double ell) {
  if (!(ell > 0.0)) throw std::invalid_argument("moment_ratio: ell must be positive");
  const double denom = ell * lambda + 1.0;
  if (!(denom > 0.0)) throw std::invalid_argument("moment_ratio: ell * lambda + 1 <= 0");
  return LogScalar(0.5 * ell * std::log1p(lambda) - 0.5 * std::log(denom) +
                   (ell * ell - ell) * lambda * z2 / (2.0 * denom));
}

LogScalar log_rho_product(const Vector& lambda, const Vector& z2) {
  if (lambda.size() != z2.size()) throw std::invalid_argument("log_rho_product: length mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    acc += moment_ratio(lambda[i], z2[i], 2.0).log();
  }
  return LogScalar(acc);
}

LogScalar log_rho_product(const DiagonalProductModel& m) {
  return log_rho_product(m.lambda(), m.z2());
}

LogScalar expected_log_rho_linear(const Vector& lambda) {
  return LogScalar(lambda.array().log1p().sum());
}

LogScalar expected_log_rho_linear(const DiagonalProductModel& m) {
  return expected_log_rho_linear(m.lambda());
}

double log_hellinger_product(const DiagonalProductModel& m) {
  return log_hellinger_product(m.lambda(), m.z2());
}

double log_hellinger_product(const Vector& lambda, const Vector& z2v) {
  if (lambda.size() != z2v.size()) {
    throw std::invalid_argument("log_hellinger_product: length mismatch");
  }
  const Eigen::ArrayXd l = lambda.array();
  const Eigen::ArrayXd z2 = z2v.array();
  return (0.5 * std::numbers::ln2 + 0.25 * l.log1p() - 0.5 * (l + 2.0).log() -
          l * z2 / (4.0 * (l + 2.0)))
      .sum();
}

double expected_log_hellinger(const Vector& lambda) {
  const Eigen::ArrayXd l = lambda.array();
  return (std::numbers::ln2 + 0.25 * l.log1p() - 0.5 * (3.0 * l + 4.0).log()).sum();
}

double expected_log_hellinger(const DiagonalProductModel& m) {
  return expected_log_hellinger(m.lambda());
}

double intrinsic_dimension(const Vector& lambda) { return lambda.sum(); }

double intrinsic_dimension(const DiagonalProductModel& m) { return intrinsic_dimension(m.lambda()); }

std::vector<EquivalenceRow> equivalence_report(const std::function<double(std::size_t)>& lambda_seq,
                                               std::size_t d_max) {
  if (d_max < 1) throw std::invalid_argument("equivalence_report: d_max >= 1");
  std::vector<EquivalenceRow> rows;
  rows.reserve(d_max);
  EquivalenceRow acc;
  for (std::size_t i = 1; i <= d_max; ++i) {
    const double l = lambda_seq(i);
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw std::invalid_argument("equivalence_report: lambda_i must be finite and >= 0");
    }
    acc.d = i;
    acc.tau += l;
    acc.log_expected_rho += std::log1p(l);
    acc.log_expected_hellinger += std::numbers::ln2 + 0.25 * std::log1p(l) - 0.5 * std::log(3.0 * l + 4.0);
    rows.push_back(acc);
  }
  return rows;
}

double variance_ratio(double lambda, double z2) {
  if (!(lambda > 0.0)) throw std::invalid_argument("variance_ratio: lambda must be positive");
  return std::expm1(moment_ratio(lambda, z2, 3.0).log() - 2.0 * moment_ratio(lambda, z2, 2.0).log());
}

}  // namespace islimits
