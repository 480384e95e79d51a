#pragma once

#include <irga/panel_data.hpp>
#include <irga/pvar.hpp>

#include <cstdint>
#include <filesystem>

namespace irga::io {

struct SimulationSpec {
  int countries = 3;
  int vars = 2;
  int lags = 1;
  int T = 200;
  double sparsity = 0.2; // probability that a cross-country coefficient is nonzero
  int burn = 100;
  YearMonth start{2000, 1};
  std::uint64_t seed = 1;
};

struct SimulatedPanel {
  SystemDraw truth;
  StructuralDraw structural;
  PanelDataset data;
};

// Stable panel VAR drawn in structural form: own first-lag coefficient 0.5,
// small dense domestic coefficients, Bernoulli-sparse cross-country lag and
// contemporaneous coefficients, unit shock variances. Countries are C1..CN,
// variables V1..VM.
SimulatedPanel simulate_panel(const SimulationSpec& spec);

// Draws a series from a given reduced-form system, started at zero.
Eigen::MatrixXd simulate_series(const SystemDraw& sd, int T, int burn, Rng& rng);

// data.csv, spec.csv and truth.json into dir.
void write_simulation(const std::filesystem::path& dir, const SimulatedPanel& sim);

double companion_spectral_radius(const SystemDraw& sd);

} // namespace irga::io
