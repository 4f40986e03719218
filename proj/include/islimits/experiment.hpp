#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "islimits/experiment_config.hpp"
#include "islimits/importance_sampling.hpp"
#include "islimits/inverse_problem.hpp"

namespace islimits {

inline constexpr int kFormatVersion = 1;

/// Quantile levels reported for per-cell max-weight and ESS samples.
inline constexpr double kQuantileLevels[] = {0.1, 0.25, 0.5, 0.75, 0.9};

/// One (theta, N) cell of a collapse grid.
struct CellRecord {
  std::size_t cell_id = 0;
  /// Grid row (index of the theta that chose N) and column (theta used).
  std::size_t row = 0;
  std::size_t col = 0;
  double theta = 0.0;
  std::int64_t n = 0;
  double log_rho = 0.0;
  std::vector<double> max_weight;
  std::vector<double> ess;
  std::vector<double> max_weight_quantiles;
  std::vector<double> ess_quantiles;
  /// Counts of max_weight over `bins` equal bins of [0, 1].
  std::vector<std::int64_t> histogram;
};

/// A plain numeric table (sweeps, comparisons, reports).
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ExperimentResult {
  std::string experiment;
  int format_version = kFormatVersion;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<CellRecord> cells;
  std::vector<Table> tables;
  std::map<std::string, double> summary;
};

/// Linear-interpolation quantile (type 7). Input need not be sorted.
double quantile(std::vector<double> v, double level);

std::vector<std::int64_t> unit_histogram(const std::vector<double>& v, int bins);

/// Stream id reserved for drawing the data y of an experiment.
inline constexpr std::uint64_t kDataStreamId = 0xDA7A0000DA7AULL;

/// Base inverse problem of the noise/prior experiments: identity A, Gamma,
/// Sigma or a seeded random instance, with y drawn once at unit scales.
LinearGaussianInverseProblem base_problem(const ExperimentConfig& cfg);

/// Sample size for grid point i given theta_i and rho(theta_i).
std::int64_t sample_size(const SampleSizeRule& rule, std::size_t i, double theta,
                         LogScalar rho);

/// Runs the experiment described by cfg. Throws BudgetExceeded before any
/// sampling when a cell would need more than cfg.budget draws.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

ExperimentResult run_collapse_grid(const ExperimentConfig& cfg);
ExperimentResult run_sweep(const ExperimentConfig& cfg);
ExperimentResult run_dichotomy(const ExperimentConfig& cfg);
ExperimentResult run_filter_compare(const ExperimentConfig& cfg);
ExperimentResult run_filter_small_noise(const ExperimentConfig& cfg);
ExperimentResult run_equivalence_report(const ExperimentConfig& cfg);

/// Exact log rho for a collapse-grid column, recomputed from the config.
double collapse_log_rho(const ExperimentConfig& cfg, double theta);

}  // namespace islimits
