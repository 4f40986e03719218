#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace islimits {

enum class ExperimentKind {
  NoiseCollapse,
  PriorCollapse,
  DimensionCollapse,
  NoiseSweep,
  PriorSweep,
  Dichotomy,
  FilterCompare,
  FilterSmallNoise,
  EquivalenceReport,
};

std::string_view to_string(ExperimentKind kind);
/// Throws ConfigInvalid for an unknown name.
ExperimentKind parse_kind(std::string_view name);

enum class OutputFormat { Csv, Json };

/// How the sample size N is chosen for grid parameter theta.
struct SampleSizeRule {
  enum class Type { Explicit, Exponent, RhoProportional };
  Type type = Type::Exponent;
  /// Explicit: one N per grid point.
  std::vector<std::int64_t> values;
  /// Exponent: N = theta^exponent (theta is the raw grid value: gamma, sigma or d).
  double exponent = 1.0;
  /// RhoProportional: N = multiplier * rho(theta).
  double multiplier = 1.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::NoiseCollapse;

  // Model.
  int d = 5;
  int k = 5;
  /// "identity" (A = Gamma = Sigma = I) or "random" (seeded random instance).
  std::string base_model = "identity";
  /// Per-coordinate lambda for dimension-collapse.
  double lambda = 1.3;
  /// z^2 of the one-dimensional dichotomy family (0 means y = 0).
  double z2 = 0.0;

  // Grids.
  std::vector<double> gammas;
  std::vector<double> sigmas;
  std::vector<int> dims;
  std::vector<double> lambdas;
  std::vector<double> rs;

  SampleSizeRule rule;
  bool diagonal_only = false;

  // Dichotomy.
  double delta = 0.5;
  double alpha = 0.5;

  // Filtering.
  int instances = 1000;
  int max_dim = 5;
  int corroboration_replicates = 200;
  std::int64_t corroboration_n = 10'000;
  std::size_t filter_d_max = 100;

  // Equivalence report: "inverse-square", "constant", "zero" or "geometric".
  std::string lambda_sequence = "inverse-square";
  double sequence_value = 1.0;
  std::size_t d_max = 50;

  // Protocol.
  int replicates = 400;
  std::uint64_t seed = 20200806;
  int bins = 20;
  /// Cap on N * replicates per cell.
  std::int64_t budget = 100'000'000;
  int threads = 0;
  std::string output;
  OutputFormat format = OutputFormat::Csv;
};

/// Defaults for a kind, including the figure-reproduction grids.
ExperimentConfig default_config(ExperimentKind kind);

/// Parse a JSON config document on top of the kind's defaults. Unknown keys
/// and ill-typed values raise ConfigInvalid.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Throws ConfigInvalid when grids are empty or non-positive, R < 1, bins < 2
/// or the rule does not fit the grid.
void validate(const ExperimentConfig& cfg);

/// Config as JSON. Threads and the output path are omitted: they never
/// influence results.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Apply IS_LIMITS_SEED and IS_LIMITS_THREADS when set.
void apply_environment(ExperimentConfig& cfg);

}  // namespace islimits
