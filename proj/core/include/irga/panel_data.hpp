#pragma once

#include <Eigen/Dense>

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace irga {

enum class Transform : int { Level = 0, YoYGrowth = 1, MoMGrowth = 2 };

Transform transform_from_code(int code);
int transform_lag(Transform t);

// Calendar month, ordered and usable as an integer offset.
struct YearMonth {
  int year = 2000;
  int month = 1;

  static YearMonth parse(const std::string& text); // "YYYY-MM"
  std::string str() const;
  int serial() const { return year * 12 + (month - 1); }
  static YearMonth from_serial(int s) { return {s / 12, s % 12 + 1}; }
  YearMonth operator+(int months) const { return from_serial(serial() + months); }
  int operator-(const YearMonth& o) const { return serial() - o.serial(); }
  auto operator<=>(const YearMonth& o) const { return serial() <=> o.serial(); }
  bool operator==(const YearMonth& o) const = default;
};

struct VariableSpec {
  std::string code;
  std::string name;
  Transform transform = Transform::Level;
  std::string country;

  // Column label in the wide data file.
  std::string label() const { return country + "." + code; }
};

struct CountryBlock {
  std::string code;
  std::vector<VariableSpec> variables;
};

// Aligned multi-country panel. Columns are ordered country by country in
// configuration order; that order is also the Cholesky ordering of the model.
class PanelDataset {
public:
  PanelDataset() = default;
  PanelDataset(std::vector<CountryBlock> countries, Eigen::MatrixXd series, std::vector<YearMonth> time_index);

  const std::vector<CountryBlock>& countries() const { return countries_; }
  const Eigen::MatrixXd& series() const { return series_; }
  const std::vector<YearMonth>& time_index() const { return time_index_; }

  int num_countries() const { return static_cast<int>(countries_.size()); }
  int num_vars(int country) const { return static_cast<int>(countries_[country].variables.size()); }
  int n() const { return static_cast<int>(series_.cols()); }
  int T() const { return static_cast<int>(series_.rows()); }

  // First column of a country block.
  int offset(int country) const { return offsets_[country]; }
  int column(int country, int equation) const { return offsets_[country] + equation; }
  int country_of(int column) const { return country_of_[column]; }
  const VariableSpec& variable(int column) const;

  // Country index per column, and variable code per column.
  std::vector<int> country_map() const { return country_of_; }
  std::vector<std::string> variable_codes() const;

  // First `rows` observations, i.e. an expanding-window estimation sample.
  PanelDataset head(int rows) const;

private:
  std::vector<CountryBlock> countries_;
  Eigen::MatrixXd series_;
  std::vector<YearMonth> time_index_;
  std::vector<int> offsets_;
  std::vector<int> country_of_;
};

// Growth transforms report percentage points. Output is shorter than the input
// by 12 (YoY), 1 (MoM) or 0 (Level) observations.
std::vector<double> transform_series(std::span<const double> raw, Transform transform,
                                     const std::string& series_name = "series",
                                     std::optional<YearMonth> start = std::nullopt);

// Rebuilds levels from transformed values and the first `lag` raw levels.
std::vector<double> reconstruct_levels(std::span<const double> transformed, Transform transform,
                                       std::span<const double> initial_levels);

// One raw series as read from the wide CSV; missing observations are NaN.
struct RawSeries {
  VariableSpec spec;
  YearMonth start;
  std::vector<double> values;
};

struct AlignResult {
  PanelDataset dataset;
  std::vector<std::string> warnings;
  std::vector<std::string> dropped; // labels of dropped variables
};

// Transforms every series and cuts all of them to the common window. Leading
// and trailing gaps only shrink a series' support; interior gaps drop it.
AlignResult align_panel(const std::vector<RawSeries>& raw, const std::vector<std::string>& country_order = {});

// A regressor column: variable index in the panel and its lag (0 means the
// contemporaneous value).
struct RegressorRef {
  int variable = 0;
  int lag = 0;
  bool operator==(const RegressorRef&) const = default;
};

enum class ColumnClass : unsigned char { Dynamic, Contemporaneous };

// Regression for equation (country, equation), both 0-based:
//   y = X_own * a + Z_other * b + e.
// X_own columns: own-country variables at lag 1, then lag 2, ..., lag p.
// Z_other columns: other-country variables at lag 1 (countries in order),
// then at lag 2, ..., lag p; then contemporaneous values of preceding
// variables of the same country; then contemporaneous values of all
// variables of preceding countries.
struct EquationDesign {
  int country = 0;
  int equation = 0;
  int lags = 1;
  Eigen::VectorXd y;
  Eigen::MatrixXd x_own;
  Eigen::MatrixXd z_other;
  std::vector<RegressorRef> own_columns;
  std::vector<RegressorRef> other_columns;
  std::vector<ColumnClass> other_classes;

  int k() const { return static_cast<int>(x_own.cols()); }
  int K() const { return static_cast<int>(z_other.cols()); }
  int T_eff() const { return static_cast<int>(y.size()); }
};

// Closed form for the number of Z_other columns (0-based indices).
int other_block_width(const PanelDataset& ds, int country, int equation, int lags);

EquationDesign build_equation_design(const PanelDataset& ds, int country, int equation, int lags);

} // namespace irga
