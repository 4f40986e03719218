#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "islimits/experiment.hpp"

namespace islimits {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

/// Main CSV. Collapse grids give one row per replicate:
/// experiment,cell_id,theta,N,replicate,max_weight,ess,log_rho
/// (header only when there are no cells). Table-only results give their
/// first table.
void write_csv(const ExperimentResult& result, std::ostream& out);

void write_table_csv(const Table& table, std::ostream& out);

/// cell_id,bin,lower,upper,count for every cell.
void write_histogram_csv(const ExperimentResult& result, std::ostream& out);

nlohmann::json to_json(const ExperimentResult& result);
ExperimentResult result_from_json(const nlohmann::json& doc);
ExperimentResult read_result_json(const std::string& path);

/// Writes `path` in the chosen format plus sidecars next to it:
/// <stem>.hist.csv for collapse grids and, for CSV output, <stem>.<table>.csv
/// for tables not in the main file. Throws IoError.
void emit(const ExperimentResult& result, const std::string& path, OutputFormat format);

}  // namespace islimits
