#include "islimits/experiment_config.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <string>
#include <utility>

#include "islimits/errors.hpp"
#include "islimits/inverse_problem.hpp"

namespace islimits {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 9> kKindNames{{
    {ExperimentKind::NoiseCollapse, "noise-collapse"},
    {ExperimentKind::PriorCollapse, "prior-collapse"},
    {ExperimentKind::DimensionCollapse, "dimension-collapse"},
    {ExperimentKind::NoiseSweep, "noise-sweep"},
    {ExperimentKind::PriorSweep, "prior-sweep"},
    {ExperimentKind::Dichotomy, "dichotomy"},
    {ExperimentKind::FilterCompare, "filter-compare"},
    {ExperimentKind::FilterSmallNoise, "filter-small-noise"},
    {ExperimentKind::EquivalenceReport, "equivalence-report"},
}};

std::string_view rule_name(SampleSizeRule::Type t) {
  switch (t) {
    case SampleSizeRule::Type::Explicit:
      return "explicit";
    case SampleSizeRule::Type::Exponent:
      return "exponent";
    case SampleSizeRule::Type::RhoProportional:
      return "rho";
  }
  return "exponent";
}

// Reads doc[key] into out when present; rejects keys not in `allowed`.
class Section {
 public:
  Section(const json& doc, std::string name, std::set<std::string> allowed)
      : doc_(doc), name_(std::move(name)) {
    if (!doc_.is_object()) throw ConfigInvalid("section '" + name_ + "' must be an object");
    for (const auto& [key, _] : doc_.items()) {
      if (!allowed.count(key)) throw ConfigInvalid("unknown key '" + key + "' in " + name_);
    }
  }

  bool has(const std::string& key) const { return doc_.contains(key); }
  const json& raw(const std::string& key) const { return doc_.at(key); }

  template <class T>
  void get(const std::string& key, T& out) const {
    if (!doc_.contains(key)) return;
    try {
      out = doc_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigInvalid(name_ + "." + key + ": " + e.what());
    }
  }

 private:
  const json& doc_;
  std::string name_;
};

// Integers may be written as 1e8 in JSON; accept integral doubles.
std::int64_t as_count(const json& v, const std::string& what) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isfinite(x) && x == std::floor(x) && std::fabs(x) < 9.2e18) {
      return static_cast<std::int64_t>(x);
    }
  }
  throw ConfigInvalid(what + " must be an integer");
}

void check_positive(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw ConfigInvalid(std::string(what) + " values must be positive and finite");
    }
  }
}

std::size_t grid_size(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::NoiseCollapse:
    case ExperimentKind::NoiseSweep:
      return cfg.gammas.size();
    case ExperimentKind::PriorCollapse:
    case ExperimentKind::PriorSweep:
      return cfg.sigmas.size();
    case ExperimentKind::DimensionCollapse:
      return cfg.dims.size();
    case ExperimentKind::Dichotomy:
      return cfg.lambdas.size();
    case ExperimentKind::FilterSmallNoise:
      return cfg.rs.size();
    case ExperimentKind::FilterCompare:
    case ExperimentKind::EquivalenceReport:
      return 1;
  }
  return 0;
}

bool uses_sample_rule(ExperimentKind kind) {
  return kind == ExperimentKind::NoiseCollapse || kind == ExperimentKind::PriorCollapse ||
         kind == ExperimentKind::DimensionCollapse;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentKind parse_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ConfigInvalid("unknown experiment kind '" + std::string(name) + "'");
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case ExperimentKind::NoiseCollapse:
      cfg.gammas = {0.25, 0.15, 0.08};
      cfg.rule.type = SampleSizeRule::Type::Exponent;
      cfg.rule.exponent = -4.0;
      break;
    case ExperimentKind::PriorCollapse:
      cfg.sigmas = {4.0, 6.7, 12.5};
      cfg.rule.type = SampleSizeRule::Type::Exponent;
      cfg.rule.exponent = 4.0;
      break;
    case ExperimentKind::DimensionCollapse:
      cfg.dims = {5, 10, 20};
      cfg.rule.type = SampleSizeRule::Type::RhoProportional;
      cfg.rule.multiplier = 1.0;
      break;
    case ExperimentKind::NoiseSweep:
      cfg.gammas = log_grid(1.0, 1e-6, 13);
      break;
    case ExperimentKind::PriorSweep:
      cfg.sigmas = log_grid(1.0, 1e6, 13);
      break;
    case ExperimentKind::Dichotomy:
      cfg.d = cfg.k = 1;
      cfg.lambdas = {2.0, 4.0, 8.0, 16.0};
      break;
    case ExperimentKind::FilterCompare:
      break;
    case ExperimentKind::FilterSmallNoise:
      cfg.rs = log_grid(1.0, 1e-6, 13);
      break;
    case ExperimentKind::EquivalenceReport:
      break;
  }
  return cfg;
}

ExperimentConfig parse_config(const json& doc) {
  const Section top(doc, "config",
                    {"experiment", "seed", "replicates", "threads", "budget", "bins", "output",
                     "format", "model", "grid", "sample_size", "collapse", "dichotomy", "filter",
                     "equivalence", "format_version"});
  if (!top.has("experiment")) throw ConfigInvalid("config needs an 'experiment' key");
  std::string kind_name;
  top.get("experiment", kind_name);
  ExperimentConfig cfg = default_config(parse_kind(kind_name));

  if (top.has("seed")) {
    const std::int64_t s = as_count(top.raw("seed"), "seed");
    if (s < 0) throw ConfigInvalid("seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  top.get("replicates", cfg.replicates);
  top.get("threads", cfg.threads);
  if (top.has("budget")) cfg.budget = as_count(top.raw("budget"), "budget");
  top.get("bins", cfg.bins);
  top.get("output", cfg.output);
  if (top.has("format")) {
    std::string f;
    top.get("format", f);
    if (f == "csv") {
      cfg.format = OutputFormat::Csv;
    } else if (f == "json") {
      cfg.format = OutputFormat::Json;
    } else {
      throw ConfigInvalid("format must be 'csv' or 'json'");
    }
  }

  if (top.has("model")) {
    const Section s(top.raw("model"), "model", {"d", "k", "base", "lambda", "z2"});
    s.get("d", cfg.d);
    s.get("k", cfg.k);
    s.get("base", cfg.base_model);
    s.get("lambda", cfg.lambda);
    s.get("z2", cfg.z2);
  }
  if (top.has("grid")) {
    const Section s(top.raw("grid"), "grid", {"gamma", "sigma", "dimension", "lambda", "r"});
    s.get("gamma", cfg.gammas);
    s.get("sigma", cfg.sigmas);
    s.get("dimension", cfg.dims);
    s.get("lambda", cfg.lambdas);
    s.get("r", cfg.rs);
  }
  if (top.has("sample_size")) {
    const Section s(top.raw("sample_size"), "sample_size",
                    {"rule", "values", "exponent", "multiplier"});
    std::string rule;
    s.get("rule", rule);
    if (rule == "explicit") {
      cfg.rule.type = SampleSizeRule::Type::Explicit;
    } else if (rule == "exponent") {
      cfg.rule.type = SampleSizeRule::Type::Exponent;
    } else if (rule == "rho") {
      cfg.rule.type = SampleSizeRule::Type::RhoProportional;
    } else if (!rule.empty()) {
      throw ConfigInvalid("sample_size.rule must be 'explicit', 'exponent' or 'rho'");
    }
    if (s.has("values")) {
      const json& vals = s.raw("values");
      if (!vals.is_array()) throw ConfigInvalid("sample_size.values must be an array");
      cfg.rule.values.clear();
      for (const auto& v : vals) cfg.rule.values.push_back(as_count(v, "sample_size.values"));
    }
    s.get("exponent", cfg.rule.exponent);
    s.get("multiplier", cfg.rule.multiplier);
  }
  if (top.has("collapse")) {
    const Section s(top.raw("collapse"), "collapse", {"diagonal_only"});
    s.get("diagonal_only", cfg.diagonal_only);
  }
  if (top.has("dichotomy")) {
    const Section s(top.raw("dichotomy"), "dichotomy", {"delta", "alpha"});
    s.get("delta", cfg.delta);
    s.get("alpha", cfg.alpha);
  }
  if (top.has("filter")) {
    const Section s(top.raw("filter"), "filter",
                    {"instances", "max_dim", "corroboration_replicates", "corroboration_n",
                     "d_max"});
    s.get("instances", cfg.instances);
    s.get("max_dim", cfg.max_dim);
    s.get("corroboration_replicates", cfg.corroboration_replicates);
    if (s.has("corroboration_n")) {
      cfg.corroboration_n = as_count(s.raw("corroboration_n"), "filter.corroboration_n");
    }
    s.get("d_max", cfg.filter_d_max);
  }
  if (top.has("equivalence")) {
    const Section s(top.raw("equivalence"), "equivalence", {"sequence", "value", "d_max"});
    s.get("sequence", cfg.lambda_sequence);
    s.get("value", cfg.sequence_value);
    s.get("d_max", cfg.d_max);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigInvalid("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.replicates < 1) throw ConfigInvalid("replicates must be >= 1");
  if (cfg.bins < 2) throw ConfigInvalid("bins must be >= 2");
  if (cfg.budget < 1) throw ConfigInvalid("budget must be positive");
  if (cfg.d < 1 || cfg.k < 1 || cfg.k > cfg.d) throw ConfigInvalid("need 1 <= k <= d");
  if (cfg.base_model != "identity" && cfg.base_model != "random") {
    throw ConfigInvalid("model.base must be 'identity' or 'random'");
  }
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) {
    throw ConfigInvalid("model.lambda must be positive");
  }
  if (!(cfg.z2 >= 0.0) || !std::isfinite(cfg.z2)) {
    throw ConfigInvalid("model.z2 must be non-negative");
  }
  check_positive(cfg.gammas, "grid.gamma");
  check_positive(cfg.sigmas, "grid.sigma");
  check_positive(cfg.lambdas, "grid.lambda");
  check_positive(cfg.rs, "grid.r");
  for (int d : cfg.dims) {
    if (d < 1) throw ConfigInvalid("grid.dimension values must be >= 1");
  }
  if (grid_size(cfg) == 0) {
    throw ConfigInvalid("grid for " + std::string(to_string(cfg.kind)) + " is empty");
  }
  if (uses_sample_rule(cfg.kind)) {
    const auto& r = cfg.rule;
    if (r.type == SampleSizeRule::Type::Explicit) {
      if (r.values.size() != grid_size(cfg)) {
        throw ConfigInvalid("sample_size.values must have one entry per grid point");
      }
      for (auto n : r.values) {
        if (n < 1) throw ConfigInvalid("sample_size.values must be positive");
      }
    }
    if (!std::isfinite(r.exponent)) throw ConfigInvalid("sample_size.exponent must be finite");
    if (!(r.multiplier > 0.0) || !std::isfinite(r.multiplier)) {
      throw ConfigInvalid("sample_size.multiplier must be positive");
    }
  }
  if (cfg.kind == ExperimentKind::Dichotomy) {
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigInvalid("delta must lie in (0, 1)");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigInvalid("alpha must lie in (0, 1)");
  }
  if (cfg.kind == ExperimentKind::FilterCompare) {
    if (cfg.instances < 0) throw ConfigInvalid("filter.instances must be >= 0");
    if (cfg.max_dim < 1) throw ConfigInvalid("filter.max_dim must be >= 1");
    if (cfg.corroboration_replicates < 0 || cfg.corroboration_n < 2) {
      throw ConfigInvalid("filter corroboration needs replicates >= 0 and n >= 2");
    }
    if (cfg.filter_d_max < 1) throw ConfigInvalid("filter.d_max must be >= 1");
  }
  if (cfg.kind == ExperimentKind::EquivalenceReport) {
    const auto& s = cfg.lambda_sequence;
    if (s != "inverse-square" && s != "constant" && s != "zero" && s != "geometric") {
      throw ConfigInvalid("equivalence.sequence must be inverse-square, constant, zero or "
                          "geometric");
    }
    if (!(cfg.sequence_value >= 0.0) || !std::isfinite(cfg.sequence_value)) {
      throw ConfigInvalid("equivalence.value must be non-negative");
    }
    if (s == "geometric" && !(cfg.sequence_value < 1.0)) {
      throw ConfigInvalid("geometric sequence needs ratio value < 1");
    }
    if (cfg.d_max < 1) throw ConfigInvalid("equivalence.d_max must be >= 1");
  }
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = std::string(to_string(cfg.kind));
  j["seed"] = cfg.seed;
  j["replicates"] = cfg.replicates;
  j["budget"] = cfg.budget;
  j["bins"] = cfg.bins;
  j["format"] = cfg.format == OutputFormat::Json ? "json" : "csv";
  j["model"] = {{"d", cfg.d},
                {"k", cfg.k},
                {"base", cfg.base_model},
                {"lambda", cfg.lambda},
                {"z2", cfg.z2}};
  j["grid"] = {{"gamma", cfg.gammas},
               {"sigma", cfg.sigmas},
               {"dimension", cfg.dims},
               {"lambda", cfg.lambdas},
               {"r", cfg.rs}};
  j["sample_size"] = {{"rule", std::string(rule_name(cfg.rule.type))},
                      {"values", cfg.rule.values},
                      {"exponent", cfg.rule.exponent},
                      {"multiplier", cfg.rule.multiplier}};
  j["collapse"] = {{"diagonal_only", cfg.diagonal_only}};
  j["dichotomy"] = {{"delta", cfg.delta}, {"alpha", cfg.alpha}};
  j["filter"] = {{"instances", cfg.instances},
                 {"max_dim", cfg.max_dim},
                 {"corroboration_replicates", cfg.corroboration_replicates},
                 {"corroboration_n", cfg.corroboration_n},
                 {"d_max", cfg.filter_d_max}};
  j["equivalence"] = {
      {"sequence", cfg.lambda_sequence}, {"value", cfg.sequence_value}, {"d_max", cfg.d_max}};
  return j;
}

void apply_environment(ExperimentConfig& cfg) {
  if (const char* s = std::getenv("IS_LIMITS_SEED"); s && *s) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (*end != '\0' || s[0] == '-') throw ConfigInvalid("IS_LIMITS_SEED must be an integer");
    cfg.seed = v;
  }
  if (const char* s = std::getenv("IS_LIMITS_THREADS"); s && *s) {
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (*end != '\0') throw ConfigInvalid("IS_LIMITS_THREADS must be an integer");
    cfg.threads = static_cast<int>(v);
  }
}

}  // namespace islimits
