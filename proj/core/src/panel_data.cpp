#include <irga/panel_data.hpp>

#include <irga/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace irga {

Transform transform_from_code(int code) {
  switch (code) {
  case 0:
    return Transform::Level;
  case 1:
    return Transform::YoYGrowth;
  case 2:
    return Transform::MoMGrowth;
  default:
    throw ValidationError("unknown transformation code " + std::to_string(code) + " (expected 0, 1 or 2)");
  }
}

int transform_lag(Transform t) {
  switch (t) {
  case Transform::YoYGrowth:
    return 12;
  case Transform::MoMGrowth:
    return 1;
  case Transform::Level:
    break;
  }
  return 0;
}

YearMonth YearMonth::parse(const std::string& text) {
  int y = 0;
  int m = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d-%d%c", &y, &m, &tail) != 2 || m < 1 || m > 12) {
    throw ValidationError("malformed month '" + text + "' (expected YYYY-MM)");
  }
  return {y, m};
}

std::string YearMonth::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

PanelDataset::PanelDataset(std::vector<CountryBlock> countries, Eigen::MatrixXd series,
                           std::vector<YearMonth> time_index)
    : countries_(std::move(countries)), series_(std::move(series)), time_index_(std::move(time_index)) {
  int col = 0;
  for (int c = 0; c < static_cast<int>(countries_.size()); ++c) {
    if (countries_[c].variables.empty()) {
      throw IngestionError("country " + countries_[c].code + " has no variables");
    }
    offsets_.push_back(col);
    for (std::size_t v = 0; v < countries_[c].variables.size(); ++v) {
      country_of_.push_back(c);
      ++col;
    }
  }
  if (col != series_.cols()) {
    throw IngestionError("panel has " + std::to_string(series_.cols()) + " columns but country blocks declare " +
                         std::to_string(col));
  }
  if (static_cast<Eigen::Index>(time_index_.size()) != series_.rows()) {
    throw IngestionError("time index length does not match the number of observations");
  }
  if (!series_.allFinite()) {
    throw IngestionError("panel contains missing or non-finite values");
  }
}

const VariableSpec& PanelDataset::variable(int column) const {
  const int c = country_of_[column];
  return countries_[c].variables[column - offsets_[c]];
}

std::vector<std::string> PanelDataset::variable_codes() const {
  std::vector<std::string> codes;
  codes.reserve(n());
  for (int col = 0; col < n(); ++col) {
    codes.push_back(variable(col).code);
  }
  return codes;
}

PanelDataset PanelDataset::head(int rows) const {
  if (rows < 0 || rows > T()) {
    throw ValidationError("window of " + std::to_string(rows) + " rows outside the panel of " + std::to_string(T()));
  }
  return PanelDataset(countries_, series_.topRows(rows),
                      std::vector<YearMonth>(time_index_.begin(), time_index_.begin() + rows));
}

std::vector<double> transform_series(std::span<const double> raw, Transform transform,
                                     const std::string& series_name, std::optional<YearMonth> start) {
  const int lag = transform_lag(transform);
  if (transform == Transform::Level) {
    return {raw.begin(), raw.end()};
  }
  if (raw.size() < static_cast<std::size_t>(lag) + 1) {
    throw DomainError("series " + series_name + " has " + std::to_string(raw.size()) + " observations; growth transform needs at least " +
                      std::to_string(lag + 1));
  }
  for (std::size_t t = 0; t < raw.size(); ++t) {
    if (!(raw[t] > 0.0)) {
      std::string when = start ? (*start + static_cast<int>(t)).str() : "index " + std::to_string(t);
      throw DomainError("series " + series_name + " has non-positive level at " + when +
                        " under a growth transform");
    }
  }
  std::vector<double> out(raw.size() - lag);
  for (std::size_t t = lag; t < raw.size(); ++t) {
    out[t - lag] = 100.0 * (raw[t] / raw[t - lag] - 1.0);
  }
  return out;
}

std::vector<double> reconstruct_levels(std::span<const double> transformed, Transform transform,
                                       std::span<const double> initial_levels) {
  const std::size_t lag = transform_lag(transform);
  if (initial_levels.size() != lag) {
    throw ValidationError("reconstruction needs exactly " + std::to_string(lag) + " initial levels");
  }
  std::vector<double> levels(initial_levels.begin(), initial_levels.end());
  levels.reserve(lag + transformed.size());
  for (std::size_t t = 0; t < transformed.size(); ++t) {
    if (lag == 0) {
      levels.push_back(transformed[t]);
    } else {
      levels.push_back(levels[t] * (1.0 + transformed[t] / 100.0));
    }
  }
  return levels;
}

namespace {

struct Support {
  const RawSeries* series;
  std::vector<double> transformed;
  int first; // serial month of transformed[0]
};

} // namespace

AlignResult align_panel(const std::vector<RawSeries>& raw, const std::vector<std::string>& country_order) {
  AlignResult result;
  std::vector<Support> kept;

  for (const auto& s : raw) {
    const auto& v = s.values;
    auto is_obs = [](double x) { return std::isfinite(x); };
    auto first = std::find_if(v.begin(), v.end(), is_obs);
    if (first == v.end()) {
      result.warnings.push_back("dropping " + s.spec.label() + ": no observations");
      result.dropped.push_back(s.spec.label());
      continue;
    }
    auto last = std::find_if(v.rbegin(), v.rend(), is_obs).base();
    if (std::any_of(first, last, [&](double x) { return !is_obs(x); })) {
      result.warnings.push_back("dropping " + s.spec.label() + ": missing values inside its coverage");
      result.dropped.push_back(s.spec.label());
      continue;
    }
    const int first_index = static_cast<int>(first - v.begin());
    const YearMonth first_month = s.start + first_index;
    std::vector<double> transformed = transform_series(std::span<const double>(&*first, static_cast<std::size_t>(last - first)),
                                                       s.spec.transform, s.spec.label(), first_month);
    if (transformed.empty()) {
      result.warnings.push_back("dropping " + s.spec.label() + ": too short for its transformation");
      result.dropped.push_back(s.spec.label());
      continue;
    }
    kept.push_back({&s, std::move(transformed), first_month.serial() + transform_lag(s.spec.transform)});
  }

  if (kept.empty()) {
    throw IngestionError("no series survived alignment");
  }

  int window_begin = std::numeric_limits<int>::min();
  int window_end = std::numeric_limits<int>::max(); // exclusive
  for (const auto& k : kept) {
    window_begin = std::max(window_begin, k.first);
    window_end = std::min(window_end, k.first + static_cast<int>(k.transformed.size()));
  }
  if (window_end <= window_begin) {
    throw IngestionError("series supports do not overlap: empty common window");
  }

  // Country order: explicit order first, then order of first appearance.
  std::vector<std::string> order = country_order;
  for (const auto& s : raw) {
    if (std::find(order.begin(), order.end(), s.spec.country) == order.end()) {
      order.push_back(s.spec.country);
    }
  }

  std::vector<CountryBlock> blocks;
  std::vector<const Support*> columns;
  for (const auto& code : order) {
    CountryBlock block{code, {}};
    for (const auto& k : kept) {
      if (k.series->spec.country == code) {
        block.variables.push_back(k.series->spec);
        columns.push_back(&k);
      }
    }
    if (block.variables.empty()) {
      throw IngestionError("country " + code + " has no variable left after alignment");
    }
    blocks.push_back(std::move(block));
  }

  const int T = window_end - window_begin;
  Eigen::MatrixXd series(T, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const int shift = window_begin - columns[c]->first;
    for (int t = 0; t < T; ++t) {
      series(t, static_cast<Eigen::Index>(c)) = columns[c]->transformed[shift + t];
    }
  }
  std::vector<YearMonth> time_index;
  time_index.reserve(T);
  for (int t = 0; t < T; ++t) {
    time_index.push_back(YearMonth::from_serial(window_begin + t));
  }
  result.dataset = PanelDataset(std::move(blocks), std::move(series), std::move(time_index));
  return result;
}

int other_block_width(const PanelDataset& ds, int country, int equation, int lags) {
  const int M_i = ds.num_vars(country);
  return (ds.n() - M_i) * lags + equation + ds.offset(country);
}

EquationDesign build_equation_design(const PanelDataset& ds, int country, int equation, int lags) {
  if (country < 0 || country >= ds.num_countries()) {
    throw ValidationError("country index " + std::to_string(country) + " out of range");
  }
  if (equation < 0 || equation >= ds.num_vars(country)) {
    throw ValidationError("equation index " + std::to_string(equation) + " out of range for country " +
                          ds.countries()[country].code);
  }
  if (lags < 1) {
    throw ValidationError("lag order must be at least 1");
  }
  const int M_i = ds.num_vars(country);
  const int k = M_i * lags;
  const int T_eff = ds.T() - lags;
  if (T_eff <= k) {
    throw ComputeError("insufficient observations for rotation: equation " + ds.countries()[country].code + "." +
                       ds.variable(ds.column(country, equation)).code + " has " + std::to_string(T_eff) +
                       " usable observations for " + std::to_string(k) + " own-lag coefficients");
  }

  EquationDesign d;
  d.country = country;
  d.equation = equation;
  d.lags = lags;

  const int own_begin = ds.offset(country);
  for (int l = 1; l <= lags; ++l) {
    for (int m = 0; m < M_i; ++m) {
      d.own_columns.push_back({own_begin + m, l});
    }
  }
  for (int l = 1; l <= lags; ++l) {
    for (int c = 0; c < ds.num_countries(); ++c) {
      if (c == country) {
        continue;
      }
      for (int m = 0; m < ds.num_vars(c); ++m) {
        d.other_columns.push_back({ds.column(c, m), l});
        d.other_classes.push_back(ColumnClass::Dynamic);
      }
    }
  }
  for (int m = 0; m < equation; ++m) {
    d.other_columns.push_back({own_begin + m, 0});
    d.other_classes.push_back(ColumnClass::Contemporaneous);
  }
  for (int col = 0; col < own_begin; ++col) {
    d.other_columns.push_back({col, 0});
    d.other_classes.push_back(ColumnClass::Contemporaneous);
  }

  const auto& Y = ds.series();
  auto fill = [&](const std::vector<RegressorRef>& refs, Eigen::MatrixXd& out) {
    out.resize(T_eff, static_cast<Eigen::Index>(refs.size()));
    for (std::size_t c = 0; c < refs.size(); ++c) {
      out.col(static_cast<Eigen::Index>(c)) = Y.col(refs[c].variable).segment(lags - refs[c].lag, T_eff);
    }
  };
  d.y = Y.col(ds.column(country, equation)).segment(lags, T_eff);
  fill(d.own_columns, d.x_own);
  fill(d.other_columns, d.z_other);
  return d;
}

} // namespace irga
