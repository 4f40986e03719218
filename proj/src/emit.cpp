#include "islimits/emit.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "islimits/errors.hpp"

namespace islimits {

using nlohmann::json;

namespace {

constexpr const char* kReplicateHeader = "experiment,cell_id,theta,N,replicate,max_weight,ess,log_rho";

std::string stem_of(const std::string& path) {
  for (const char* ext : {".csv", ".json"}) {
    const std::string e(ext);
    if (path.size() > e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0) {
      return path.substr(0, path.size() - e.size());
    }
  }
  return path;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

double number_or_nan(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

std::vector<double> numbers(const json& v) {
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number_or_nan(x));
  return out;
}

bool main_csv_is_table(const ExperimentResult& r) { return r.cells.empty() && !r.tables.empty(); }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return {buf, res.ptr};
}

void write_csv(const ExperimentResult& result, std::ostream& out) {
  if (main_csv_is_table(result)) {
    write_table_csv(result.tables.front(), out);
    return;
  }
  out << kReplicateHeader << '\n';
  for (const auto& c : result.cells) {
    for (std::size_t r = 0; r < c.max_weight.size(); ++r) {
      out << result.experiment << ',' << c.cell_id << ',' << format_double(c.theta) << ','
          << c.n << ',' << r << ',' << format_double(c.max_weight[r]) << ','
          << format_double(c.ess[r]) << ',' << format_double(c.log_rho) << '\n';
    }
  }
}

void write_table_csv(const Table& table, std::ostream& out) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

void write_histogram_csv(const ExperimentResult& result, std::ostream& out) {
  out << "cell_id,bin,lower,upper,count\n";
  for (const auto& c : result.cells) {
    const auto bins = static_cast<double>(c.histogram.size());
    for (std::size_t b = 0; b < c.histogram.size(); ++b) {
      out << c.cell_id << ',' << b << ',' << format_double(static_cast<double>(b) / bins) << ','
          << format_double(static_cast<double>(b + 1) / bins) << ',' << c.histogram[b] << '\n';
    }
  }
}

json to_json(const ExperimentResult& result) {
  json j;
  j["format_version"] = result.format_version;
  j["experiment"] = result.experiment;
  j["seed"] = result.seed;
  j["config"] = result.config;
  j["summary"] = result.summary;
  j["quantile_levels"] = std::vector<double>(std::begin(kQuantileLevels), std::end(kQuantileLevels));
  json cells = json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"cell_id", c.cell_id},
                     {"row", c.row},
                     {"col", c.col},
                     {"theta", c.theta},
                     {"N", c.n},
                     {"log_rho", c.log_rho},
                     {"max_weight", c.max_weight},
                     {"ess", c.ess},
                     {"max_weight_quantiles", c.max_weight_quantiles},
                     {"ess_quantiles", c.ess_quantiles},
                     {"histogram", c.histogram}});
  }
  j["cells"] = std::move(cells);
  json tables = json::array();
  for (const auto& t : result.tables) {
    tables.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}});
  }
  j["tables"] = std::move(tables);
  return j;
}

ExperimentResult result_from_json(const json& doc) {
  ExperimentResult r;
  try {
    r.format_version = doc.at("format_version").get<int>();
    if (r.format_version != kFormatVersion) {
      throw IoError("unsupported result format version " + std::to_string(r.format_version));
    }
    r.experiment = doc.at("experiment").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.config = doc.at("config");
    for (const auto& [k, v] : doc.at("summary").items()) r.summary[k] = number_or_nan(v);
    for (const auto& c : doc.at("cells")) {
      CellRecord cell;
      cell.cell_id = c.at("cell_id").get<std::size_t>();
      cell.row = c.at("row").get<std::size_t>();
      cell.col = c.at("col").get<std::size_t>();
      cell.theta = c.at("theta").get<double>();
      cell.n = c.at("N").get<std::int64_t>();
      cell.log_rho = number_or_nan(c.at("log_rho"));
      cell.max_weight = numbers(c.at("max_weight"));
      cell.ess = numbers(c.at("ess"));
      cell.max_weight_quantiles = numbers(c.at("max_weight_quantiles"));
      cell.ess_quantiles = numbers(c.at("ess_quantiles"));
      cell.histogram = c.at("histogram").get<std::vector<std::int64_t>>();
      r.cells.push_back(std::move(cell));
    }
    for (const auto& t : doc.at("tables")) {
      Table table;
      table.name = t.at("name").get<std::string>();
      table.columns = t.at("columns").get<std::vector<std::string>>();
      for (const auto& row : t.at("rows")) table.rows.push_back(numbers(row));
      r.tables.push_back(std::move(table));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed result document: ") + e.what());
  }
  return r;
}

ExperimentResult read_result_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return result_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw IoError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void emit(const ExperimentResult& result, const std::string& path, OutputFormat format) {
  const std::string stem = stem_of(path);
  if (format == OutputFormat::Json) {
    write_file(path, to_json(result).dump(1) + "\n");
  } else {
    std::ostringstream main;
    write_csv(result, main);
    write_file(path, main.str());
    const std::size_t first_extra = main_csv_is_table(result) ? 1 : 0;
    for (std::size_t i = first_extra; i < result.tables.size(); ++i) {
      std::ostringstream t;
      write_table_csv(result.tables[i], t);
      write_file(stem + "." + result.tables[i].name + ".csv", t.str());
    }
  }
  if (!result.cells.empty()) {
    std::ostringstream h;
    write_histogram_csv(result, h);
    write_file(stem + ".hist.csv", h.str());
  }
}

}  // namespace islimits
