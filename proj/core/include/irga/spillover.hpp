#pragma once

#include <irga/panel_data.hpp>
#include <irga/pvar.hpp>
#include <irga/stats.hpp>

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace irga {

// Forecast error variance shares with Cholesky (U sqrt(H)) identification.
// shares(a, b): fraction of variable a's H_f-step forecast error variance due
// to shock b.
struct FevdMatrix {
  Eigen::MatrixXd shares;
  int horizon = 12;
};

// Returns nullopt when the MA recursion overflows (explosive draws).
std::optional<FevdMatrix> fevd(const SystemDraw& sd, int horizon);

// Mean over variables of the share of forecast error variance coming from
// shocks of other countries.
double dy_total_cross_country(const FevdMatrix& f, const std::vector<int>& country_of);

// Per variable type: rows of that type, FEVD restricted to columns of the same
// type and re-normalised; mean foreign share. Types are keyed by code.
std::map<std::string, double> dy_by_variable(const FevdMatrix& f, const std::vector<int>& country_of,
                                             const std::vector<std::string>& type_of);

// Per country: mean over its variables of the foreign share.
std::vector<double> dy_by_country(const FevdMatrix& f, const std::vector<int>& country_of);

struct SpilloverPoint {
  std::string window_end;
  BandSummary bands;
  int excluded = 0;
  std::vector<double> draws;
};

// One named series (e.g. "total", a variable code or a country code).
struct SpilloverSeries {
  std::string variant; // "total", "variable" or "country"
  std::string key;
  std::vector<SpilloverPoint> points;
};

struct SpilloverResult {
  std::vector<SpilloverSeries> total;
  std::vector<SpilloverSeries> by_variable;
  std::vector<SpilloverSeries> by_country;
  std::vector<std::string> failures;
};

// Produces posterior system draws for an estimation window.
using SystemSampler = std::function<std::vector<SystemDraw>(const PanelDataset& window, Rng& rng)>;

// Index draws for one set of system draws, summarised as one window point.
struct WindowIndices {
  std::vector<double> total;
  std::map<std::string, std::vector<double>> by_variable;
  std::vector<std::vector<double>> by_country;
  int excluded = 0;
};

WindowIndices spillover_indices(const std::vector<SystemDraw>& draws, int horizon, const std::vector<int>& country_of,
                                const std::vector<std::string>& type_of, int num_countries);

// window_ends: numbers of rows in each expanding estimation window.
SpilloverResult spillover_recursion(const PanelDataset& ds, const SystemSampler& sampler, int horizon,
                                    const std::vector<int>& window_ends, std::uint64_t seed, unsigned threads = 1);

SystemSampler make_irga_sampler(PvarOptions opts, bool propagate_b_uncertainty, int max_draws = 0);

} // namespace irga
