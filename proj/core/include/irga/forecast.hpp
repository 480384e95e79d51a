#pragma once

#include <irga/panel_data.hpp>
#include <irga/pvar.hpp>
#include <irga/random.hpp>

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace irga {

// Simulated predictive paths. paths[d] is H x n for draw d. For the one-step
// horizon the draw-conditional Gaussian moments are kept as well, which the
// log score uses in place of the sampled values.
struct ForecastDistribution {
  std::vector<Eigen::MatrixXd> paths;
  Eigen::MatrixXd one_step_mean; // draws x n
  Eigen::MatrixXd one_step_var;  // draws x n
  int origin = 0;                // rows in the estimation sample
  int horizon = 0;

  int num_draws() const { return static_cast<int>(paths.size()); }
  int n() const { return paths.empty() ? 0 : static_cast<int>(paths.front().cols()); }
  std::vector<double> draws_of(int h, int variable) const; // h is 1-based
};

// history: the last p observations, oldest first (p x n).
ForecastDistribution simulate_forecast(const std::vector<SystemDraw>& systems, const Eigen::MatrixXd& history, int horizon,
                                       Rng& rng);

enum class PointForecast { Median, Mean };

double point_forecast(const std::vector<double>& draws, PointForecast kind);

double rmse(std::span<const double> forecasts, std::span<const double> actuals);

// log (1/D) sum_d N(actual | mean_d, var_d), computed with log-sum-exp.
double log_predictive_mixture(std::span<const double> means, std::span<const double> vars, double actual);

// Log density of a Gaussian fitted to the draws.
double log_predictive_gaussian(std::span<const double> draws, double actual);

// Log score of a forecast for variable at horizon h (1-based): mixture of the
// conditional Gaussians at h = 1, Gaussian fit to the draws beyond.
double log_predictive_score(const ForecastDistribution& f, int h, int variable, double actual);

using ModelRunner = std::function<ForecastDistribution(const PanelDataset& window, int horizon, Rng& rng)>;

struct NamedModel {
  std::string name;
  ModelRunner run;
};

struct RecursiveDesign {
  int first_origin = 0; // rows in the first estimation sample
  int last_origin = 0;  // inclusive; clipped to T - 1
  int horizon = 12;
  std::string benchmark;
  PointForecast point = PointForecast::Median;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct ScoreRecord {
  int origin = 0; // rows in the estimation sample
  std::string origin_label;
  std::string country;
  std::string variable;
  int horizon = 1;
  std::string model;
  double forecast = 0.0;
  double actual = 0.0;
  double lps = 0.0;
};

struct ScoreEntry {
  std::string model;
  std::string variable;
  std::string country;
  int horizon = 1;
  double rmse = 0.0;
  double lps = 0.0;
  double relative_rmse = 1.0;
  double relative_lps = 0.0;
  int count = 0;
};

struct ScoreTable {
  std::vector<ScoreEntry> entries;

  // Table 2 layout: unweighted mean over countries of the per-country ratios
  // (RMSE) and differences (LPS), per model, variable and horizon.
  struct Aggregate {
    std::string model;
    std::string variable;
    int horizon = 1;
    double relative_rmse = 1.0;
    double relative_lps = 0.0;
    int countries = 0;
  };
  std::vector<Aggregate> aggregated;
};

// Cumulative sums of LPS(model) - LPS(benchmark) for one model and horizon.
struct CumulativeLps {
  std::string model;
  int horizon = 1;
  std::vector<std::string> origin_labels;
  std::vector<std::string> row_labels;  // COUNTRY.VARIABLE
  Eigen::MatrixXd per_origin;           // rows x origins, NaN where missing
  Eigen::MatrixXd cumulative;           // prefix sums, missing counted as 0
};

struct RecursiveResult {
  std::vector<ScoreRecord> records;
  ScoreTable table;
  std::vector<CumulativeLps> cumulative;
  std::vector<std::string> failures; // "model@origin: message"
};

ScoreTable build_score_table(const std::vector<ScoreRecord>& records, const std::string& benchmark);

std::vector<CumulativeLps> cumulative_lps(const std::vector<ScoreRecord>& records, const std::string& benchmark,
                                          const std::vector<std::string>& origin_labels);

// Expanding-window exercise. The estimation sample at origin t is the first t
// rows; forecasts target rows t, ..., t + H - 1 where they exist.
RecursiveResult recursive_exercise(const PanelDataset& ds, const RecursiveDesign& design,
                                   const std::vector<NamedModel>& models);

// Runner that estimates the panel VAR on the window and simulates from every
// saved posterior draw.
ModelRunner make_irga_runner(PvarOptions opts, bool propagate_b_uncertainty);

// Per-variable Gaussian random walk with increment variance estimated on the
// window. Used as a simple reference model.
ModelRunner make_random_walk_runner(int num_draws);

} // namespace irga
