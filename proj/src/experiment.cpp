#include "islimits/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "islimits/diagonal_model.hpp"
#include "islimits/errors.hpp"
#include "islimits/filtering.hpp"
#include "islimits/parallel.hpp"

namespace islimits {

namespace {

constexpr std::uint64_t kModelStreamId = kDataStreamId + 1;
constexpr std::uint64_t kFilterInstanceCell = 0xF117E5;
constexpr std::uint64_t kCorroborationCell = 0xC022;

std::vector<double> grid_values(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::NoiseCollapse:
    case ExperimentKind::NoiseSweep:
      return cfg.gammas;
    case ExperimentKind::PriorCollapse:
    case ExperimentKind::PriorSweep:
      return cfg.sigmas;
    case ExperimentKind::DimensionCollapse:
      return {cfg.dims.begin(), cfg.dims.end()};
    default:
      throw ConfigInvalid("experiment kind has no scalar grid");
  }
}

// Diagonal model with per-coordinate lambda, sized for the largest grid d.
DiagonalProductModel dimension_model(const ExperimentConfig& cfg) {
  const int d_max = *std::max_element(cfg.dims.begin(), cfg.dims.end());
  const Vector a = Vector::Ones(d_max);
  const Vector sigma2 = Vector::Ones(d_max);
  const Vector gamma2 = Vector::Constant(d_max, 1.0 / cfg.lambda);
  Stream stream(cfg.seed, kDataStreamId);
  Vector y(d_max);
  NormalDistribution normal;
  for (int i = 0; i < d_max; ++i) {
    const double u = normal(stream);
    const double eta = std::sqrt(gamma2[i]) * normal(stream);
    y[i] = a[i] * u + eta;
  }
  return {a, gamma2, sigma2, y};
}

LinearGaussianInverseProblem cell_problem(const ExperimentConfig& cfg, double theta) {
  switch (cfg.kind) {
    case ExperimentKind::NoiseCollapse:
    case ExperimentKind::NoiseSweep:
      return base_problem(cfg).with_noise_scale(theta);
    case ExperimentKind::PriorCollapse:
    case ExperimentKind::PriorSweep:
      return base_problem(cfg).with_prior_scale(theta);
    case ExperimentKind::DimensionCollapse:
      return dimension_model(cfg).prefix(static_cast<std::size_t>(theta)).to_inverse_problem();
    default:
      throw ConfigInvalid("experiment kind has no inverse problem grid");
  }
}

GaussianDensityRatio posterior_vs_prior(const LinearGaussianInverseProblem& ip) {
  return {posterior(ip).as_gaussian(), ip.prior()};
}

std::int64_t checked_round(double x, const char* what) {
  if (!std::isfinite(x) || x >= 9.0e18) {
    throw BudgetExceeded(std::string(what) + " sample size overflows");
  }
  return std::max<std::int64_t>(2, std::llround(x));
}

std::vector<double> quantiles(const std::vector<double>& v) {
  std::vector<double> out;
  for (double level : kQuantileLevels) out.push_back(quantile(v, level));
  return out;
}

ExperimentResult make_result(const ExperimentConfig& cfg) {
  ExperimentResult r;
  r.experiment = std::string(to_string(cfg.kind));
  r.seed = cfg.seed;
  r.config = to_json(cfg);
  return r;
}

std::function<double(std::size_t)> equivalence_sequence(const ExperimentConfig& cfg) {
  const double v = cfg.sequence_value;
  if (cfg.lambda_sequence == "inverse-square") {
    return [](std::size_t i) { return 1.0 / (static_cast<double>(i) * static_cast<double>(i)); };
  }
  if (cfg.lambda_sequence == "constant") return [v](std::size_t) { return v; };
  if (cfg.lambda_sequence == "zero") return [](std::size_t) { return 0.0; };
  return [v](std::size_t i) { return std::pow(v, static_cast<double>(i - 1)); };
}

}  // namespace

double quantile(std::vector<double> v, double level) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = level * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<std::int64_t> unit_histogram(const std::vector<double>& v, int bins) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(bins), 0);
  for (double x : v) {
    auto b = static_cast<int>(std::floor(x * bins));
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

LinearGaussianInverseProblem base_problem(const ExperimentConfig& cfg) {
  const Eigen::Index d = cfg.d, k = cfg.k;
  Matrix a, gamma, sigma;
  if (cfg.base_model == "random") {
    Stream model_stream(cfg.seed, kModelStreamId);
    a = random_matrix(k, d, model_stream);
    gamma = random_spd(k, model_stream);
    sigma = random_spd(d, model_stream);
  } else {
    a = Matrix::Identity(k, d);
    gamma = Matrix::Identity(k, k);
    sigma = Matrix::Identity(d, d);
  }
  Stream data_stream(cfg.seed, kDataStreamId);
  Vector y = draw_data(a, gamma, sigma, data_stream);
  return {std::move(a), std::move(gamma), std::move(sigma), std::move(y)};
}

std::int64_t sample_size(const SampleSizeRule& rule, std::size_t i, double theta,
                         LogScalar rho) {
  switch (rule.type) {
    case SampleSizeRule::Type::Explicit:
      if (i >= rule.values.size()) throw ConfigInvalid("explicit sample sizes too short");
      return std::max<std::int64_t>(2, rule.values[i]);
    case SampleSizeRule::Type::Exponent:
      return checked_round(std::pow(theta, rule.exponent), "exponent rule");
    case SampleSizeRule::Type::RhoProportional:
      if (rho.is_infinite()) throw BudgetExceeded("rho is infinite");
      return checked_round(rule.multiplier * std::exp(rho.log()), "rho-proportional rule");
  }
  return 2;
}

double collapse_log_rho(const ExperimentConfig& cfg, double theta) {
  return log_rho_posterior_prior(cell_problem(cfg, theta)).log();
}

ExperimentResult run_collapse_grid(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::vector<double> thetas = grid_values(cfg);
  const std::size_t n = thetas.size();
  std::vector<double> log_rho(n);
  std::vector<std::int64_t> sizes(n);
  for (std::size_t i = 0; i < n; ++i) {
    log_rho[i] = collapse_log_rho(cfg, thetas[i]);
    sizes[i] = sample_size(cfg.rule, i, thetas[i], LogScalar(log_rho[i]));
    const double draws = static_cast<double>(sizes[i]) * cfg.replicates;
    if (draws > static_cast<double>(cfg.budget)) {
      throw BudgetExceeded("cell row " + std::to_string(i) + " needs N*R = " +
                           std::to_string(sizes[i]) + "*" + std::to_string(cfg.replicates) +
                           " draws, budget " + std::to_string(cfg.budget));
    }
  }

  ExperimentResult result = make_result(cfg);
  std::vector<GaussianDensityRatio> ratios;
  ratios.reserve(n);
  for (double t : thetas) ratios.push_back(posterior_vs_prior(cell_problem(cfg, t)));

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (cfg.diagonal_only && i != j) continue;
      CellRecord cell;
      cell.cell_id = i * n + j;
      cell.row = i;
      cell.col = j;
      cell.theta = thetas[j];
      cell.n = sizes[i];
      cell.log_rho = log_rho[j];
      const auto diag = replicate_diagnostics(ratios[j], cell.n, cfg.replicates, cfg.seed,
                                              cell.cell_id, cfg.threads);
      for (const auto& dg : diag) {
        cell.max_weight.push_back(dg.max_weight);
        cell.ess.push_back(dg.ess);
      }
      cell.max_weight_quantiles = quantiles(cell.max_weight);
      cell.ess_quantiles = quantiles(cell.ess);
      cell.histogram = unit_histogram(cell.max_weight, cfg.bins);
      if (i == j) {
        result.summary["median_max_weight_diagonal_" + std::to_string(i)] =
            cell.max_weight_quantiles[2];
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

ExperimentResult run_sweep(const ExperimentConfig& cfg) {
  if (cfg.kind == ExperimentKind::FilterSmallNoise) return run_filter_small_noise(cfg);
  validate(cfg);
  ExperimentResult result = make_result(cfg);
  const LinearGaussianInverseProblem base = base_problem(cfg);
  const bool noise = cfg.kind == ExperimentKind::NoiseSweep;
  if (!noise && cfg.kind != ExperimentKind::PriorSweep) {
    throw ConfigInvalid("run_sweep needs noise-sweep, prior-sweep or filter-small-noise");
  }
  const auto sweep =
      noise ? noise_sweep(base, cfg.gammas, cfg.threads) : prior_sweep(base, cfg.sigmas, cfg.threads);
  Table t{"sweep", {noise ? "gamma" : "sigma", "log_rho"}, {}};
  for (const auto& p : sweep) t.rows.push_back({p.scale, p.log_rho.log()});
  result.tables.push_back(std::move(t));
  if (sweep.size() >= 2) {
    const SlopeFit fit = noise ? noise_slope(sweep) : prior_slope(sweep);
    result.summary["slope"] = fit.slope;
    result.summary["slope_std_error"] = fit.std_error;
    result.summary["slope_points"] = static_cast<double>(fit.points);
  }
  // The exact exponent: k for small noise; for prior scaling it is also k,
  // which equals d in the square case.
  result.summary["expected_slope"] = cfg.k;
  return result;
}

ExperimentResult run_filter_small_noise(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult result = make_result(cfg);
  Stream stream(cfg.seed, kDataStreamId);
  const OneStepFilterModel fm = random_filter_model(cfg.d, cfg.k, stream);
  const auto rows = small_noise_study(fm, cfg.rs, cfg.threads);
  Table t{"small_noise", {"r", "log_rho_std", "log_rho_opt"}, {}};
  std::vector<double> x, y;
  for (const auto& row : rows) {
    t.rows.push_back({row.r, row.log_rho_std.log(), row.log_rho_opt.log()});
    x.push_back(-std::log(row.r));
    y.push_back(row.log_rho_std.log());
  }
  result.tables.push_back(std::move(t));
  if (rows.size() >= 2) {
    const SlopeFit fit = fit_asymptotic_slope(x, y);
    result.summary["std_slope"] = fit.slope;
    result.summary["std_slope_std_error"] = fit.std_error;
  }
  result.summary["expected_slope"] = cfg.k;
  result.summary["opt_limit"] = optimal_small_noise_limit(fm).log();
  result.summary["opt_last"] = rows.back().log_rho_opt.log();
  return result;
}

ExperimentResult run_dichotomy(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult result = make_result(cfg);
  std::vector<DichotomyMember> family;
  for (double lambda : cfg.lambdas) {
    const Vector l = Vector::Constant(1, lambda);
    const Vector z2 = Vector::Constant(1, cfg.z2);
    const auto ip = DiagonalProductModel::from_lambda(l, z2).to_inverse_problem();
    family.push_back({lambda, posterior_vs_prior(ip), log_rho_posterior_prior(ip)});
  }
  DichotomyOptions opt;
  opt.delta = cfg.delta;
  opt.alpha = cfg.alpha;
  opt.replicates = cfg.replicates;
  opt.max_particles = cfg.budget / cfg.replicates;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  const auto records = dichotomy_trial(family, opt);

  Table t{"dichotomy",
          {"lambda", "log_rho", "branch", "exponent", "N", "mu_phi", "mean_abs_error",
           "abs_error_se", "mse", "mse_se", "sufficient_bound", "event_frequency", "event_se",
           "necessary_bound"},
          {}};
  for (const auto& rec : records) {
    const double rho = std::exp(rec.rho.log());
    for (int b = 0; b < 2; ++b) {
      const DichotomyBranch& br = b == 0 ? rec.plus : rec.minus;
      const double nn = static_cast<double>(br.n);
      t.rows.push_back({rec.theta, rec.rho.log(), b == 0 ? 1.0 : -1.0, br.exponent, nn,
                        rec.mu_phi, br.abs_error.mean, br.abs_error.std_error,
                        br.squared_error.mean, br.squared_error.std_error, 4.0 * rho / nn,
                        br.event_frequency.mean, br.event_frequency.std_error,
                        1.0 - nn / (cfg.alpha * rho)});
    }
  }
  result.tables.push_back(std::move(t));
  return result;
}

ExperimentResult run_filter_compare(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult result = make_result(cfg);

  const auto count = static_cast<std::size_t>(cfg.instances);
  std::vector<std::vector<double>> rows(count);
  parallel::for_each_index(cfg.instances, cfg.threads, [&](std::int64_t i) {
    Stream s(cfg.seed, replicate_stream_id(kFilterInstanceCell, static_cast<std::uint64_t>(i)));
    const auto d = static_cast<Eigen::Index>(1 + s() % static_cast<std::uint64_t>(cfg.max_dim));
    const auto k = static_cast<Eigen::Index>(1 + s() % static_cast<std::uint64_t>(d));
    const OneStepFilterModel fm = random_filter_model(d, k, s);
    const ProposalComparison c = compare_proposals(fm);
    rows[static_cast<std::size_t>(i)] = {static_cast<double>(i), static_cast<double>(d),
                                         static_cast<double>(k), c.log_rho_std.log(),
                                         c.log_rho_opt.log(), c.s_discrepancy};
  });
  std::size_t strict = 0;
  double max_disc = 0.0;
  for (const auto& r : rows) {
    if (r[3] > r[4]) ++strict;
    max_disc = std::max(max_disc, r[5]);
  }
  result.tables.push_back({"comparisons",
                           {"instance", "d", "k", "log_rho_std", "log_rho_opt", "s_discrepancy"},
                           std::move(rows)});
  result.summary["fraction_std_gt_opt"] =
      count ? static_cast<double>(strict) / static_cast<double>(count) : 1.0;
  result.summary["max_s_discrepancy"] = max_disc;
  result.summary["scalar_lambda_std"] = lambda_standard(1, 1, 1, 1, 1);
  result.summary["scalar_lambda_opt"] = lambda_optimal(1, 1, 1, 1, 1);

  // Diagonal example with q_i^2 = i^2.
  DiagonalFilterSequences seq;
  const auto one = [](std::size_t) { return 1.0; };
  seq.h = seq.m = seq.p = seq.r = one;
  seq.q = [](std::size_t i) { return static_cast<double>(i); };
  Table crit{"diagonal_criteria", {"d", "tau_std", "tau_opt"}, {}};
  for (const auto& row : diagonal_filter_criteria(seq, cfg.filter_d_max)) {
    crit.rows.push_back({static_cast<double>(row.d), row.tau_std, row.tau_opt});
  }
  result.tables.push_back(std::move(crit));

  // Sampling corroboration on a fixed two-dimensional instance with
  // informative observations.
  const Matrix id = Matrix::Identity(2, 2);
  OneStepFilterModel fm(id, id, id, id, 0.1 * id, Vector::Zero(2));
  Stream data_stream(cfg.seed, kDataStreamId);
  fm = fm.with_data(draw_filter_data(fm, data_stream));
  const auto std_ip = standard_problem(fm);
  const auto opt_ip = optimal_problem(fm);
  const GaussianDensityRatio std_ratio = posterior_vs_prior(std_ip);
  const GaussianDensityRatio opt_ratio = posterior_vs_prior(opt_ip);
  const int reps = cfg.corroboration_replicates;
  Table cor{"corroboration", {"replicate", "log_rho_hat_std", "log_rho_hat_opt"}, {}};
  cor.rows.resize(static_cast<std::size_t>(reps));
  parallel::for_each_index(reps, cfg.threads, [&](std::int64_t r) {
    const auto rr = static_cast<std::uint64_t>(r);
    Stream s_std(cfg.seed, replicate_stream_id(kCorroborationCell, 2 * rr));
    Stream s_opt(cfg.seed, replicate_stream_id(kCorroborationCell, 2 * rr + 1));
    const auto d_std = diagnostics_from_log_weights(
        sample_log_weights(std_ratio, cfg.corroboration_n, s_std));
    const auto d_opt = diagnostics_from_log_weights(
        sample_log_weights(opt_ratio, cfg.corroboration_n, s_opt));
    cor.rows[static_cast<std::size_t>(r)] = {static_cast<double>(r), d_std.rho_hat.log(),
                                             d_opt.rho_hat.log()};
  });
  std::size_t wins = 0;
  for (const auto& r : cor.rows) wins += r[1] > r[2] ? 1 : 0;
  result.summary["corroboration_log_rho_std"] = log_rho_posterior_prior(std_ip).log();
  result.summary["corroboration_log_rho_opt"] = log_rho_posterior_prior(opt_ip).log();
  result.summary["corroboration_fraction"] =
      reps ? static_cast<double>(wins) / static_cast<double>(reps) : 1.0;
  result.tables.push_back(std::move(cor));
  return result;
}

ExperimentResult run_equivalence_report(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult result = make_result(cfg);
  Table t{"equivalence", {"d", "tau", "log_expected_rho", "log_expected_hellinger"}, {}};
  for (const auto& row : equivalence_report(equivalence_sequence(cfg), cfg.d_max)) {
    t.rows.push_back({static_cast<double>(row.d), row.tau, row.log_expected_rho,
                      row.log_expected_hellinger});
  }
  const auto& last = t.rows.back();
  result.summary["tau"] = last[1];
  result.summary["log_expected_rho"] = last[2];
  result.summary["log_expected_hellinger"] = last[3];
  result.tables.push_back(std::move(t));
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::NoiseCollapse:
    case ExperimentKind::PriorCollapse:
    case ExperimentKind::DimensionCollapse:
      return run_collapse_grid(cfg);
    case ExperimentKind::NoiseSweep:
    case ExperimentKind::PriorSweep:
    case ExperimentKind::FilterSmallNoise:
      return run_sweep(cfg);
    case ExperimentKind::Dichotomy:
      return run_dichotomy(cfg);
    case ExperimentKind::FilterCompare:
      return run_filter_compare(cfg);
    case ExperimentKind::EquivalenceReport:
      return run_equivalence_report(cfg);
  }
  throw ConfigInvalid("unknown experiment kind");
}

}  // namespace islimits
