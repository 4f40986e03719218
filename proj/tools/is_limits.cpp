// Experiment driver: runs one configured experiment and writes CSV or JSON.
//
//   is_limits --config noise.json --out noise.csv
//   is_limits --kind prior-sweep --format json --out sweep.json
//
// Precedence: kind defaults < config file < IS_LIMITS_SEED / IS_LIMITS_THREADS
// < command-line flags.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "islimits/emit.hpp"
#include "islimits/errors.hpp"
#include "islimits/experiment.hpp"
#include "islimits/experiment_config.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kBudget = 3, kIo = 4 };

void print_summary(const islimits::ExperimentResult& r) {
  std::cerr << r.experiment << " seed=" << r.seed << " cells=" << r.cells.size()
            << " tables=" << r.tables.size() << '\n';
  for (const auto& [key, value] : r.summary) {
    std::cerr << "  " << key << " = " << islimits::format_double(value) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Importance sampling experiments on linear-Gaussian inverse problems"};
  std::string config_path, kind, out, format;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates, threads;
  std::optional<std::int64_t> budget;
  bool print_config = false;
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--kind", kind, "experiment kind when no config file is given");
  app.add_option("--seed", seed, "base seed");
  app.add_option("--out", out, "output path (stdout when omitted)");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--replicates", replicates, "replicates per cell");
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)");
  app.add_option("--budget", budget, "max particle draws per cell");
  app.add_flag("--print-config", print_config, "print the effective config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    islimits::ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = islimits::load_config(config_path);
      if (!kind.empty() && islimits::parse_kind(kind) != cfg.kind) {
        throw islimits::ConfigInvalid("--kind disagrees with the config file");
      }
    } else if (!kind.empty()) {
      cfg = islimits::default_config(islimits::parse_kind(kind));
    } else {
      throw islimits::ConfigInvalid("need --config or --kind");
    }
    islimits::apply_environment(cfg);
    if (seed) cfg.seed = *seed;
    if (replicates) cfg.replicates = *replicates;
    if (threads) cfg.threads = *threads;
    if (budget) cfg.budget = *budget;
    if (!out.empty()) cfg.output = out;
    if (format == "json") cfg.format = islimits::OutputFormat::Json;
    if (format == "csv") cfg.format = islimits::OutputFormat::Csv;
    islimits::validate(cfg);

    if (print_config) {
      std::cout << islimits::to_json(cfg).dump(2) << '\n';
      return kOk;
    }

    const islimits::ExperimentResult result = islimits::run_experiment(cfg);
    if (cfg.output.empty()) {
      if (cfg.format == islimits::OutputFormat::Json) {
        std::cout << islimits::to_json(result).dump(1) << '\n';
      } else {
        islimits::write_csv(result, std::cout);
      }
    } else {
      islimits::emit(result, cfg.output, cfg.format);
    }
    print_summary(result);
    return kOk;
  } catch (const islimits::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const islimits::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return kBudget;
  } catch (const islimits::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
