#include "islimits/importance_sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "islimits/errors.hpp"
#include "islimits/parallel.hpp"

namespace islimits {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Standard normal upper tail P(Z > x).
double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Log-sum-exp accumulator over a stream of values, used to merge chunk sums.
struct LogAccumulator {
  double log_sum = kNegInf;

  void add(double log_value) {
    if (log_value == kNegInf) return;
    if (log_sum == kNegInf) {
      log_sum = log_value;
    } else if (log_value > log_sum) {
      log_sum = log_value + std::log1p(std::exp(log_sum - log_value));
    } else {
      log_sum = log_sum + std::log1p(std::exp(log_value - log_sum));
    }
  }
};

struct ChunkSums {
  double log_sum_g = kNegInf;
  double log_sum_g2 = kNegInf;
};

ChunkSums chunk_sums(const Gaussian& proposal, const LogDensity& log_g, std::int64_t n,
                     Stream stream) {
  const Vector lg = sample_log_weights(proposal, log_g, n, stream);
  return {log_sum_exp(lg), log_sum_exp(2.0 * lg)};
}

MonteCarloMoments combine_chunks(const std::vector<ChunkSums>& chunks, std::int64_t n) {
  LogAccumulator g, g2;
  for (const auto& c : chunks) {
    g.add(c.log_sum_g);
    g2.add(c.log_sum_g2);
  }
  const double log_n = std::log(static_cast<double>(n));
  return {LogScalar(g.log_sum - log_n), LogScalar(g2.log_sum - log_n), n};
}

void check_replicate_inputs(std::span<const TestFunction> phis, std::span<const double> exact,
                            std::int64_t n, int replicates) {
  if (phis.size() != exact.size()) {
    throw std::invalid_argument("replicate_errors: phis and exact values differ in length");
  }
  if (n < 1 || replicates < 1) {
    throw std::invalid_argument("replicate_errors: n and replicates must be >= 1");
  }
}

void fill_replicate_row(const GaussianDensityRatio& ratio, std::span<const TestFunction> phis,
                        std::span<const double> exact, std::int64_t n, std::uint64_t seed,
                        std::uint64_t cell, std::int64_t r, Matrix& out) {
  Stream stream(seed, replicate_stream_id(cell, static_cast<std::uint64_t>(r)));
  const LogDensity log_g = [&ratio](const Eigen::Ref<const Vector>& u) { return ratio(u); };
  const WeightedEnsemble ens = build_ensemble(ratio.proposal(), log_g, n, stream);
  for (std::size_t j = 0; j < phis.size(); ++j) {
    out(r, static_cast<Eigen::Index>(j)) = estimate(ens, phis[j]) - exact[j];
  }
}

}  // namespace

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  if (v.size() == 0) return kNegInf;
  const double shift = v.maxCoeff();
  if (shift == kNegInf) return kNegInf;
  if (std::isinf(shift)) return shift;
  return shift + std::log((v.array() - shift).exp().sum());
}

GaussianDensityRatio::GaussianDensityRatio(Gaussian target, Gaussian proposal)
    : target_(std::move(target)), proposal_(std::move(proposal)) {
  if (target_.dim() != proposal_.dim()) {
    throw std::invalid_argument("GaussianDensityRatio: dimension mismatch");
  }
  log_norm_ = -0.5 * (target_.log_det() - proposal_.log_det());
  const auto lt = target_.chol().triangularView<Eigen::Lower>();
  whitened_chol_ = lt.solve(proposal_.chol());
  whitened_shift_ = lt.solve(proposal_.mean() - target_.mean());
}

Vector GaussianDensityRatio::from_standard_normals(const Matrix& z) const {
  Matrix w = whitened_chol_.triangularView<Eigen::Lower>() * z;
  w.colwise() += whitened_shift_;
  return (0.5 * (z.colwise().squaredNorm() - w.colwise().squaredNorm())).transpose().array() +
         log_norm_;
}

double GaussianDensityRatio::operator()(const Eigen::Ref<const Vector>& u) const {
  const Vector r_target =
      target_.chol().triangularView<Eigen::Lower>().solve(u - target_.mean());
  const Vector r_proposal =
      proposal_.chol().triangularView<Eigen::Lower>().solve(u - proposal_.mean());
  return -0.5 * r_target.squaredNorm() + 0.5 * r_proposal.squaredNorm() + log_norm_;
}

WeightedEnsemble::WeightedEnsemble(Matrix particles, Vector log_g)
    : particles_(std::move(particles)), log_g_(std::move(log_g)) {
  if (particles_.cols() != log_g_.size()) {
    throw std::invalid_argument("WeightedEnsemble: particle and log-density counts differ");
  }
  if (log_g_.size() == 0) throw std::invalid_argument("WeightedEnsemble: empty ensemble");
  if (log_g_.array().isNaN().any()) throw DegenerateWeights("log-density is NaN");
  log_total_ = log_sum_exp(log_g_);
  if (log_total_ == kNegInf) throw DegenerateWeights("all log-densities are -inf");
  if (std::isinf(log_total_)) throw DegenerateWeights("log-density is +inf");
  const double shift = log_g_.maxCoeff();
  // std::exp keeps exp(-inf) exactly 0; the vectorized exp clamps to a subnormal.
  weights_ = (log_g_.array() - shift).unaryExpr([](double v) { return std::exp(v); });
  weights_ /= weights_.sum();
}

WeightedEnsemble build_ensemble(const Gaussian& proposal, const LogDensity& log_g,
                                Eigen::Index n, Stream& stream) {
  if (n < 1) throw std::invalid_argument("build_ensemble: n must be >= 1");
  Matrix particles = proposal.sample(stream, n);
  Vector lg(n);
  for (Eigen::Index i = 0; i < n; ++i) lg[i] = log_g(particles.col(i));
  return WeightedEnsemble(std::move(particles), std::move(lg));
}

Vector sample_log_weights(const Gaussian& proposal, const LogDensity& log_g, Eigen::Index n,
                          Stream& stream) {
  if (n < 1) throw std::invalid_argument("sample_log_weights: n must be >= 1");
  const Eigen::Index d = proposal.dim();
  NormalDistribution normal;
  Vector z(d), u(d), lg(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(stream);
    u.noalias() = proposal.chol().triangularView<Eigen::Lower>() * z;
    u += proposal.mean();
    lg[j] = log_g(u);
  }
  return lg;
}

Vector sample_log_weights(const GaussianDensityRatio& ratio, Eigen::Index n, Stream& stream) {
  if (n < 1) throw std::invalid_argument("sample_log_weights: n must be >= 1");
  constexpr Eigen::Index kBlock = 2048;
  const Eigen::Index d = ratio.proposal().dim();
  NormalDistribution normal;
  Vector lg(n);
  Matrix z(d, std::min(n, kBlock));
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index cols = std::min(kBlock, n - start);
    if (cols != z.cols()) z.resize(d, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) z(i, j) = normal(stream);
    }
    lg.segment(start, cols) = ratio.from_standard_normals(z);
  }
  return lg;
}

double estimate(const WeightedEnsemble& ens, const TestFunction& phi) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ens.size(); ++i) {
    const double w = ens.weights()[i];
    if (w != 0.0) acc += w * phi(ens.particles().col(i));
  }
  return acc;
}

ISDiagnostics diagnostics_from_log_weights(const Eigen::Ref<const Vector>& log_g) {
  const Eigen::Index n = log_g.size();
  if (n == 0) throw std::invalid_argument("diagnostics: empty ensemble");
  const double lse = log_sum_exp(log_g);
  if (!std::isfinite(lse)) throw DegenerateWeights("diagnostics: degenerate log-densities");
  const double lse2 = log_sum_exp(2.0 * log_g);
  ISDiagnostics out;
  out.n = n;
  // ESS = (sum g)^2 / sum g^2, computed as a ratio of log-sums.
  out.ess = std::exp(2.0 * lse - lse2);
  out.ess = std::clamp(out.ess, 1.0, static_cast<double>(n));
  out.max_weight = std::exp(log_g.maxCoeff() - lse);
  out.rho_hat = LogScalar(lse2 - 2.0 * lse + std::log(static_cast<double>(n)));
  return out;
}

ISDiagnostics diagnostics(const WeightedEnsemble& ens) {
  ISDiagnostics out = diagnostics_from_log_weights(ens.log_g());
  const Vector& w = ens.weights();
  out.ess = std::clamp(1.0 / w.squaredNorm(), 1.0, static_cast<double>(w.size()));
  out.max_weight = w.maxCoeff();
  return out;
}

std::function<double(double)> necessary_test_function(LogScalar rho, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("necessary_test_function: alpha must lie in (0, 1)");
  }
  if (!rho.is_finite()) throw std::invalid_argument("necessary_test_function: rho not finite");
  const double threshold = std::log(alpha) + rho.log();
  return [threshold](double log_g_hat) { return log_g_hat <= threshold ? 1.0 : 0.0; };
}

double indicator_probability(const GaussianDensityRatio& ratio, double log_threshold,
                             std::uint64_t seed, std::int64_t mc_draws, int threads) {
  const Gaussian& target = ratio.target();
  const Gaussian& proposal = ratio.proposal();
  if (target.dim() == 1) {
    const double m = target.mean()[0], c = target.cov()(0, 0);
    const double m2 = proposal.mean()[0], s = proposal.cov()(0, 0);
    // log g_hat(u) - t = a u^2 + b u + k.
    const double a = -0.5 / c + 0.5 / s;
    const double b = m / c - m2 / s;
    const double k = -0.5 * m * m / c + 0.5 * m2 * m2 / s - 0.5 * std::log(c) +
                     0.5 * std::log(s) - log_threshold;
    const double sd = std::sqrt(c);
    const double scale = 0.5 / c + 0.5 / s;
    if (std::abs(a) <= 1e-14 * scale) {
      if (b == 0.0) return k <= 0.0 ? 1.0 : 0.0;
      const double root = -k / b;
      // b > 0: event is u <= root.
      return b > 0.0 ? normal_upper_tail(-(root - m) / sd) : normal_upper_tail((root - m) / sd);
    }
    const double disc = b * b - 4.0 * a * k;
    if (disc <= 0.0) return a < 0.0 ? 1.0 : 0.0;
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    double lo = q / a, hi = k / q;
    if (lo > hi) std::swap(lo, hi);
    const double below = normal_upper_tail(-(lo - m) / sd);
    const double above = normal_upper_tail((hi - m) / sd);
    if (a < 0.0) return below + above;
    return std::max(0.0, 1.0 - below - above);
  }

  // Direct sampling from the target; chunked like mc_moments.
  const std::int64_t chunk = 1 << 16;
  const std::int64_t chunks = (mc_draws + chunk - 1) / chunk;
  std::vector<std::int64_t> hits(static_cast<std::size_t>(chunks), 0);
  parallel::for_each_index(chunks, threads, [&](std::int64_t c) {
    Stream stream(seed, static_cast<std::uint64_t>(c));
    const std::int64_t count = std::min(chunk, mc_draws - c * chunk);
    NormalDistribution normal;
    Vector z(target.dim()), u(target.dim());
    std::int64_t h = 0;
    for (std::int64_t j = 0; j < count; ++j) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(stream);
      u = target.mean() + target.chol().triangularView<Eigen::Lower>() * z;
      if (ratio(u) <= log_threshold) ++h;
    }
    hits[static_cast<std::size_t>(c)] = h;
  });
  std::int64_t total = 0;
  for (auto h : hits) total += h;
  return static_cast<double>(total) / static_cast<double>(mc_draws);
}

MonteCarloMoments mc_moments(const Gaussian& proposal, const LogDensity& log_g, std::int64_t n,
                             std::uint64_t seed, int threads, std::int64_t chunk_size) {
  if (n < 1 || chunk_size < 1) throw std::invalid_argument("mc_moments: n, chunk_size >= 1");
  const std::int64_t chunks = (n + chunk_size - 1) / chunk_size;
  std::vector<ChunkSums> sums(static_cast<std::size_t>(chunks));
  parallel::for_each_index(chunks, threads, [&](std::int64_t c) {
    const std::int64_t count = std::min(chunk_size, n - c * chunk_size);
    sums[static_cast<std::size_t>(c)] =
        chunk_sums(proposal, log_g, count, Stream(seed, static_cast<std::uint64_t>(c)));
  });
  return combine_chunks(sums, n);
}

MonteCarloMoments mc_moments_serial(const Gaussian& proposal, const LogDensity& log_g,
                                    std::int64_t n, std::uint64_t seed,
                                    std::int64_t chunk_size) {
  if (n < 1 || chunk_size < 1) throw std::invalid_argument("mc_moments: n, chunk_size >= 1");
  const std::int64_t chunks = (n + chunk_size - 1) / chunk_size;
  std::vector<ChunkSums> sums(static_cast<std::size_t>(chunks));
  parallel::for_each_index_serial(chunks, [&](std::int64_t c) {
    const std::int64_t count = std::min(chunk_size, n - c * chunk_size);
    sums[static_cast<std::size_t>(c)] =
        chunk_sums(proposal, log_g, count, Stream(seed, static_cast<std::uint64_t>(c)));
  });
  return combine_chunks(sums, n);
}

std::int64_t sample_size_from_rho(LogScalar rho, double exponent) {
  if (!rho.is_finite()) throw BudgetExceeded("sample size from an infinite rho");
  const double log_n = exponent * rho.log();
  if (log_n > std::log(9.0e18)) throw BudgetExceeded("sample size overflows");
  const auto n = static_cast<std::int64_t>(std::llround(std::exp(log_n)));
  return std::max<std::int64_t>(n, 2);
}

Matrix replicate_errors(const GaussianDensityRatio& ratio, std::span<const TestFunction> phis,
                        std::span<const double> exact, std::int64_t n, int replicates,
                        std::uint64_t seed, std::uint64_t cell, int threads) {
  check_replicate_inputs(phis, exact, n, replicates);
  Matrix out(replicates, static_cast<Eigen::Index>(phis.size()));
  parallel::for_each_index(replicates, threads, [&](std::int64_t r) {
    fill_replicate_row(ratio, phis, exact, n, seed, cell, r, out);
  });
  return out;
}

Matrix replicate_errors_serial(const GaussianDensityRatio& ratio,
                               std::span<const TestFunction> phis, std::span<const double> exact,
                               std::int64_t n, int replicates, std::uint64_t seed,
                               std::uint64_t cell) {
  check_replicate_inputs(phis, exact, n, replicates);
  Matrix out(replicates, static_cast<Eigen::Index>(phis.size()));
  parallel::for_each_index_serial(replicates, [&](std::int64_t r) {
    fill_replicate_row(ratio, phis, exact, n, seed, cell, r, out);
  });
  return out;
}

namespace {

ISDiagnostics one_replicate(const GaussianDensityRatio& ratio, std::int64_t n,
                            std::uint64_t seed, std::uint64_t cell, std::int64_t r) {
  Stream stream(seed, replicate_stream_id(cell, static_cast<std::uint64_t>(r)));
  return diagnostics_from_log_weights(sample_log_weights(ratio, n, stream));
}

void check_diagnostic_inputs(std::int64_t n, int replicates) {
  if (n < 1) throw std::invalid_argument("replicate_diagnostics: n must be positive");
  if (replicates < 0) throw std::invalid_argument("replicate_diagnostics: negative replicates");
}

}  // namespace

std::vector<ISDiagnostics> replicate_diagnostics(const GaussianDensityRatio& ratio,
                                                 std::int64_t n, int replicates,
                                                 std::uint64_t seed, std::uint64_t cell,
                                                 int threads) {
  check_diagnostic_inputs(n, replicates);
  std::vector<ISDiagnostics> out(static_cast<std::size_t>(replicates));
  parallel::for_each_index(replicates, threads, [&](std::int64_t r) {
    out[static_cast<std::size_t>(r)] = one_replicate(ratio, n, seed, cell, r);
  });
  return out;
}

std::vector<ISDiagnostics> replicate_diagnostics_serial(const GaussianDensityRatio& ratio,
                                                        std::int64_t n, int replicates,
                                                        std::uint64_t seed, std::uint64_t cell) {
  check_diagnostic_inputs(n, replicates);
  std::vector<ISDiagnostics> out(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    out[static_cast<std::size_t>(r)] = one_replicate(ratio, n, seed, cell, r);
  }
  return out;
}

MeanAndError mean_and_error(const Eigen::Ref<const Vector>& samples) {
  MeanAndError out;
  const auto n = samples.size();
  if (n == 0) return {std::nan(""), std::nan("")};
  out.mean = samples.mean();
  if (n < 2) {
    out.std_error = std::nan("");
    return out;
  }
  const double var = (samples.array() - out.mean).square().sum() / static_cast<double>(n - 1);
  out.std_error = std::sqrt(var / static_cast<double>(n));
  return out;
}

std::vector<DichotomyRecord> dichotomy_trial(std::span<const DichotomyMember> family,
                                             const DichotomyOptions& options) {
  if (!(options.delta > 0.0)) throw std::invalid_argument("dichotomy_trial: delta must be > 0");
  if (options.replicates < 1) throw std::invalid_argument("dichotomy_trial: replicates >= 1");

  // Size everything up front so a budget violation is reported before any work.
  std::vector<std::array<std::int64_t, 2>> sizes;
  for (const auto& member : family) {
    const std::array<std::int64_t, 2> ns = {
        sample_size_from_rho(member.rho, 1.0 + options.delta),
        sample_size_from_rho(member.rho, 1.0 - options.delta)};
    for (auto n : ns) {
      if (n > options.max_particles) {
        throw BudgetExceeded("dichotomy_trial: N = " + std::to_string(n) + " at theta = " +
                             std::to_string(member.theta) + " exceeds the cap of " +
                             std::to_string(options.max_particles));
      }
    }
    sizes.push_back(ns);
  }

  std::vector<DichotomyRecord> records;
  records.reserve(family.size());
  for (std::size_t idx = 0; idx < family.size(); ++idx) {
    const auto& member = family[idx];
    DichotomyRecord rec;
    rec.theta = member.theta;
    rec.rho = member.rho;
    const double threshold = std::log(options.alpha) + member.rho.log();
    const auto indicator = necessary_test_function(member.rho, options.alpha);
    rec.mu_phi = indicator_probability(member.ratio, threshold, options.seed ^ 0xA11CEull);
    const double tail = 1.0 - rec.mu_phi;

    const GaussianDensityRatio& ratio = member.ratio;
    const std::array<TestFunction, 1> phis = {
        [&ratio, indicator](const Eigen::Ref<const Vector>& u) { return indicator(ratio(u)); }};
    const std::array<double, 1> exact = {rec.mu_phi};

    for (int branch = 0; branch < 2; ++branch) {
      DichotomyBranch& out = branch == 0 ? rec.plus : rec.minus;
      out.exponent = branch == 0 ? 1.0 + options.delta : 1.0 - options.delta;
      out.n = sizes[idx][static_cast<std::size_t>(branch)];
      const Matrix err =
          replicate_errors(ratio, phis, exact, out.n, options.replicates, options.seed,
                           2 * static_cast<std::uint64_t>(idx) + static_cast<std::uint64_t>(branch),
                           options.threads);
      const Vector abs_err = err.col(0).cwiseAbs();
      Vector events(options.replicates);
      out.errors.assign(abs_err.data(), abs_err.data() + abs_err.size());
      out.events.resize(static_cast<std::size_t>(options.replicates));
      for (int r = 0; r < options.replicates; ++r) {
        const bool hit = std::abs(abs_err[r] - tail) <= 1e-12;
        out.events[static_cast<std::size_t>(r)] = hit ? 1 : 0;
        events[r] = hit ? 1.0 : 0.0;
      }
      out.abs_error = mean_and_error(abs_err);
      out.squared_error = mean_and_error(abs_err.array().square().matrix());
      out.event_frequency = mean_and_error(events);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace islimits
