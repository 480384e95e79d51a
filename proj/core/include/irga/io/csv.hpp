#pragma once

#include <irga/panel_data.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace irga::io {

// Shortest text that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& cell); // empty, NA, NaN -> NaN

std::vector<std::string> split_csv_line(const std::string& line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const; // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& path);

// code,country,transform[,name]
std::vector<VariableSpec> read_variable_specs(const std::filesystem::path& path);

// Wide data file: first column YYYY-MM, then COUNTRY.CODE columns. Series are
// returned in spec order; months missing from the file become NaN.
std::vector<RawSeries> read_wide_csv(const std::filesystem::path& path, const std::vector<VariableSpec>& specs);

AlignResult load_panel(const std::filesystem::path& data_csv, const std::filesystem::path& spec_csv);

void write_wide_csv(const std::filesystem::path& path, const std::vector<std::string>& labels, YearMonth start,
                    const Eigen::MatrixXd& values);

void write_variable_specs(const std::filesystem::path& path, const std::vector<VariableSpec>& specs);

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {});
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path, bool has_header = true);

// Write to a temporary sibling, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

} // namespace irga::io
