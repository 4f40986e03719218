#include "islimits/inverse_problem.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <string>

#include "islimits/errors.hpp"
#include "islimits/parallel.hpp"

namespace islimits {

void check_full_rank(const Matrix& m, const char* what) {
  if (m.size() == 0) throw FullRankViolation(std::string(what) + " is empty");
  const Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double largest = s.maxCoeff();
  const double smallest = s.minCoeff();
  if (!(largest > 0.0) || !(smallest > kFullRankRelativeTol * largest)) {
    throw FullRankViolation(std::string(what) + " is not full rank");
  }
}

LinearGaussianInverseProblem::LinearGaussianInverseProblem(Matrix design, Matrix noise_cov,
                                                           Matrix prior_cov, Vector data)
    : design_(std::move(design)),
      noise_cov_(symmetrize(noise_cov)),
      prior_cov_(symmetrize(prior_cov)),
      data_(std::move(data)) {
  const auto k = design_.rows(), d = design_.cols();
  if (k > d) throw std::invalid_argument("inverse problem requires k <= d");
  if (noise_cov_.rows() != k || noise_cov_.cols() != k) {
    throw std::invalid_argument("noise covariance must be k x k");
  }
  if (prior_cov_.rows() != d || prior_cov_.cols() != d) {
    throw std::invalid_argument("prior covariance must be d x d");
  }
  if (data_.size() != k) throw std::invalid_argument("data must have length k");
  check_full_rank(design_, "design matrix A");
  cholesky_lower(noise_cov_, "noise covariance");
  cholesky_lower(prior_cov_, "prior covariance");
}

Gaussian LinearGaussianInverseProblem::prior() const {
  return Gaussian(Vector::Zero(param_dim()), prior_cov_);
}

LinearGaussianInverseProblem LinearGaussianInverseProblem::with_noise_scale(double gamma) const {
  if (!(gamma > 0.0)) throw std::invalid_argument("noise scale must be positive");
  return {design_, gamma * gamma * noise_cov_, prior_cov_, data_};
}

LinearGaussianInverseProblem LinearGaussianInverseProblem::with_prior_scale(double sigma) const {
  if (!(sigma > 0.0)) throw std::invalid_argument("prior scale must be positive");
  return {design_, noise_cov_, sigma * sigma * prior_cov_, data_};
}

LinearGaussianInverseProblem LinearGaussianInverseProblem::with_data(Vector data) const {
  return {design_, noise_cov_, prior_cov_, std::move(data)};
}

PosteriorSummary posterior(const LinearGaussianInverseProblem& ip) {
  const Matrix& a = ip.design();
  const Matrix& sigma = ip.prior_cov();
  PosteriorSummary out;
  out.innovation_cov = symmetrize(a * sigma * a.transpose() + ip.noise_cov());
  const Matrix s_lower = cholesky_lower(out.innovation_cov, "innovation covariance S");
  // K^T = S^{-1} A Sigma
  Matrix kt = s_lower.triangularView<Eigen::Lower>().solve(a * sigma);
  s_lower.transpose().triangularView<Eigen::Upper>().solveInPlace(kt);
  out.gain = kt.transpose();
  out.mean = out.gain * ip.data();
  const Matrix identity = Matrix::Identity(ip.param_dim(), ip.param_dim());
  out.cov = symmetrize((identity - out.gain * a) * sigma);
  return out;
}

LogScalar log_rho_posterior_prior(const LinearGaussianInverseProblem& ip) {
  // Evaluated in observation space. With P = A Sigma A^T and S = P + Gamma,
  //   |I - KA| = |Gamma| / |S|,  |I + KA| = |2P + Gamma| / |S|,
  //   m^T [(I + KA) Sigma]^{-1} m = y^T S^{-1} P (2P + Gamma)^{-1} y.
  // Forming I - KA directly cancels catastrophically once Gamma << P.
  const Matrix& a = ip.design();
  const Matrix p = symmetrize(a * ip.prior_cov() * a.transpose());
  const Matrix s = symmetrize(p + ip.noise_cov());
  const Matrix two_p = symmetrize(2.0 * p + ip.noise_cov());
  const Matrix s_lower = cholesky_lower(s, "innovation covariance S");
  const Matrix two_p_lower = cholesky_lower(two_p, "2 A Sigma A^T + Gamma");
  const double log_det_s = 2.0 * s_lower.diagonal().array().log().sum();
  const double log_det_two_p = 2.0 * two_p_lower.diagonal().array().log().sum();
  const double log_det_gamma = log_det_pd(ip.noise_cov());
  const auto solve = [&](const Matrix& lower) {
    const Vector half = lower.triangularView<Eigen::Lower>().solve(ip.data());
    return Vector(lower.transpose().triangularView<Eigen::Upper>().solve(half));
  };
  const double quad = solve(s_lower).dot(p * solve(two_p_lower));
  return LogScalar(log_det_s - 0.5 * (log_det_two_p + log_det_gamma) + quad);
}

std::vector<SweepPoint> noise_sweep(const LinearGaussianInverseProblem& base,
                                    std::span<const double> gammas, int threads) {
  std::vector<SweepPoint> out(gammas.size());
  parallel::for_each_index(static_cast<std::int64_t>(gammas.size()), threads,
                           [&](std::int64_t i) {
                             const double g = gammas[static_cast<std::size_t>(i)];
                             out[static_cast<std::size_t>(i)] = {
                                 g, log_rho_posterior_prior(base.with_noise_scale(g))};
                           });
  return out;
}

std::vector<SweepPoint> prior_sweep(const LinearGaussianInverseProblem& base,
                                    std::span<const double> sigmas, int threads) {
  std::vector<SweepPoint> out(sigmas.size());
  parallel::for_each_index(static_cast<std::int64_t>(sigmas.size()), threads,
                           [&](std::int64_t i) {
                             const double s = sigmas[static_cast<std::size_t>(i)];
                             out[static_cast<std::size_t>(i)] = {
                                 s, log_rho_posterior_prior(base.with_prior_scale(s))};
                           });
  return out;
}

SlopeFit fit_asymptotic_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("slope fit: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("slope fit needs at least two points");
  const std::size_t start = std::min(n / 2, n - 2);
  const std::size_t m = n - start;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = start; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = start; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("slope fit: degenerate abscissae");
  SlopeFit fit;
  fit.points = m;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (m > 2) {
    double ssr = 0.0;
    for (std::size_t i = start; i < n; ++i) {
      const double e = y[i] - (fit.intercept + fit.slope * x[i]);
      ssr += e * e;
    }
    fit.std_error = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
  } else {
    fit.std_error = std::nan("");
  }
  return fit;
}

namespace {

SlopeFit sweep_slope(std::span<const SweepPoint> sweep, double sign) {
  std::vector<double> x, y;
  for (const auto& p : sweep) {
    x.push_back(sign * std::log(p.scale));
    y.push_back(p.log_rho.log());
  }
  return fit_asymptotic_slope(x, y);
}

}  // namespace

SlopeFit noise_slope(std::span<const SweepPoint> sweep) { return sweep_slope(sweep, -1.0); }

SlopeFit prior_slope(std::span<const SweepPoint> sweep) { return sweep_slope(sweep, 1.0); }

Vector draw_data(const Matrix& design, const Matrix& noise_cov, const Matrix& prior_cov,
                 Stream& stream) {
  const Gaussian prior(Vector::Zero(design.cols()), prior_cov);
  const Gaussian noise(Vector::Zero(design.rows()), noise_cov);
  Vector u(design.cols()), eta(design.rows());
  prior.sample_into(stream, u);
  noise.sample_into(stream, eta);
  return design * u + eta;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Stream& stream) {
  Matrix m(rows, cols);
  Vector col(rows);
  for (Eigen::Index j = 0; j < cols; ++j) {
    standard_normals(stream, col);
    m.col(j) = col;
  }
  return m;
}

Matrix random_spd(Eigen::Index n, Stream& stream) {
  const Matrix g = random_matrix(n, n, stream);
  return g * g.transpose() + 0.1 * Matrix::Identity(n, n);
}

LinearGaussianInverseProblem random_problem(Eigen::Index d, Eigen::Index k, Stream& stream) {
  Matrix a = random_matrix(k, d, stream);
  Matrix gamma = random_spd(k, stream);
  Matrix sigma = random_spd(d, stream);
  Vector y = draw_data(a, gamma, sigma, stream);
  return {std::move(a), std::move(gamma), std::move(sigma), std::move(y)};
}

std::vector<double> log_grid(double first, double last, std::size_t points) {
  if (!(first > 0.0 && last > 0.0) || points == 0) {
    throw std::invalid_argument("log_grid: positive endpoints and points >= 1 required");
  }
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = first;
    return out;
  }
  const double lf = std::log(first), ll = std::log(last);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = std::exp(lf + (ll - lf) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  out.back() = last;
  return out;
}

}  // namespace islimits
