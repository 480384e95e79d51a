#pragma once

#include <irga/gibbs.hpp>
#include <irga/panel_data.hpp>
#include <irga/random.hpp>
#include <irga/vamp.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace irga {

// Posterior for one equation: exact draws of the own-lag block and the
// Gaussian approximation of the other-country block.
struct EquationPosterior {
  int country = 0;
  int equation = 0;
  int variable = 0; // global column index of the response
  std::vector<RegressorRef> own_columns;
  std::vector<RegressorRef> other_columns;
  std::vector<ColumnClass> other_classes;
  ChainDraws chain;
  ApproxPosterior approx;
  double seconds = 0.0;

  int k() const { return static_cast<int>(own_columns.size()); }
  int K() const { return static_cast<int>(other_columns.size()); }
};

struct PvarPosterior {
  int n = 0;
  int lags = 1;
  std::vector<int> country_of;               // per variable
  std::vector<EquationPosterior> equations;  // ordered by global variable index

  int n_save() const { return equations.empty() ? 0 : static_cast<int>(equations.front().chain.a_draws.rows()); }
};

struct PvarOptions {
  int lags = 1;
  VampConfig vamp;
  McmcConfig mcmc;     // mcmc.seed is the root seed for all equations
  unsigned threads = 1;
};

// Reduced form y_t = Phi [y_{t-1}; ...; y_{t-p}] + U e_t, e_t ~ N(0, diag(h)).
struct SystemDraw {
  Eigen::MatrixXd phi; // n x n*p, lag-major blocks
  Eigen::MatrixXd u;   // unit lower triangular
  Eigen::VectorXd h;   // idiosyncratic variances

  int n() const { return static_cast<int>(u.rows()); }
  int lags() const { return n() == 0 ? 0 : static_cast<int>(phi.cols() / n()); }
  Eigen::MatrixXd sigma() const { return u * h.asDiagonal() * u.transpose(); }
  Eigen::MatrixXd lag_matrix(int lag) const { return phi.middleCols(static_cast<Eigen::Index>(lag - 1) * n(), n()); }
};

// Structural form of a draw: y_t = L y_t + Phi_s Y_lags + e_t.
struct StructuralDraw {
  Eigen::MatrixXd l;     // strictly lower triangular
  Eigen::MatrixXd phi_s; // n x n*p
  Eigen::VectorXd h;
};

// One equation of the panel: design, rotation, VAMP, plug-in likelihood, MCMC.
EquationPosterior estimate_equation(const PanelDataset& ds, int country, int equation, const PvarOptions& opts);

PvarPosterior estimate_pvar(const PanelDataset& ds, const PvarOptions& opts);

StructuralDraw structural_draw(const PvarPosterior& post, int draw_index, Rng& rng, bool propagate_b_uncertainty);
SystemDraw to_reduced_form(const StructuralDraw& s);

SystemDraw assemble_system_draw(const PvarPosterior& post, int draw_index, Rng& rng, bool propagate_b_uncertainty);

// Inverse of to_reduced_form: L = I - U^{-1}, Phi_s = U^{-1} Phi.
StructuralDraw to_structural(const SystemDraw& sd);

} // namespace irga
