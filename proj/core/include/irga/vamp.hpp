#pragma once

#include <irga/panel_data.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace irga {

inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kVarianceCeiling = 1e12;
inline constexpr double kSigma2Floor = 1e-10;

// How the EM steps use the current belief about the coefficients.
//   Expected: expectations under the approximate posterior. The noise update
//     takes E||y2 - Z2 beta||^2 under the linear-model belief, the Horseshoe
//     update uses E[beta_i^2] = beta_bar_i^2 + s_i and carries the expected
//     inverses of the auxiliaries (nu and xi hold E[1/nu], E[1/xi]).
//   Plugin: the point updates written in terms of beta_bar alone, with nu and
//     xi treated as the auxiliaries themselves.
enum class EmForm { Expected, Plugin };

struct VampConfig {
  double tol = 1e-6;            // on ||beta_bar(j) - beta_bar(j-1)||^2
  int max_iter = 500;
  double damping = 0.9;         // weight on the new message
  double zeta_init = 10.0;
  Eigen::VectorXd xi_init;      // empty means zeros
  double a_sigma = 0.01;        // inverse-gamma prior on the noise variance
  double b_sigma = 0.01;
  double sigma2_init = 0.0;     // <= 0: start from y2'y2 / T_r
  bool update_sigma2 = true;
  bool update_shrinkage = true;
  EmForm em_form = EmForm::Expected;
  bool record_trace = false;

  void validate() const;
};

// Thin SVD of the rotated design, rank-truncated at 1e-12 * d_max.
struct SvdCache {
  Eigen::MatrixXd u;
  Eigen::VectorXd d;
  Eigen::MatrixXd v;
  Eigen::Index num_cols = 0;

  static SvdCache compute(const Eigen::MatrixXd& design);
  Eigen::Index rank() const { return d.size(); }
};

// Horseshoe scales for the other-country block. Dynamic (lagged) columns and
// contemporaneous columns have separate global scales.
struct HorseshoeState {
  Eigen::VectorXd psi2;
  Eigen::VectorXd nu;
  double lambda2_b = 1.0;
  double lambda2_u = 1.0;
  double xi_aux_b = 1.0;
  double xi_aux_u = 1.0;

  static HorseshoeState initial(Eigen::Index K);
  // psi_i^2 * lambda^2 of the column's class.
  Eigen::VectorXd prior_variances(const std::vector<ColumnClass>& classes) const;
  bool valid() const;
};

struct VampState {
  Eigen::VectorXd xi;
  double zeta = 0.0;
  Eigen::VectorXd beta_bar;
  double s = 0.0;
  Eigen::VectorXd xi_star;
  double zeta_star = 0.0;
  Eigen::VectorXd beta_bar_star;
  double s_star = 0.0;
  double sigma2 = 1.0;
};

struct DenoiseResult {
  Eigen::VectorXd beta_bar;
  double s = 0.0;
};

struct ExtrinsicResult {
  Eigen::VectorXd xi;
  double zeta = 0.0;
  bool clamped = false;
};

struct LmmseResult {
  Eigen::VectorXd beta_bar_star;
  double s_star = 0.0;
};

struct VampTraceRow {
  int iteration = 0;
  double delta2 = 0.0;
  double s = 0.0;
  double sigma2 = 0.0;
};

// Gaussian approximation N(mean, var_scalar * I) to the other-country block.
struct ApproxPosterior {
  Eigen::VectorXd mean;
  double var_scalar = 0.0;
  double sigma2_hat = 1.0;
  bool converged = true;
  int iterations = 0;
  std::size_t clamp_count = 0;
  HorseshoeState shrinkage;
  std::vector<VampTraceRow> trace;
};

// Posterior mean and averaged variance of beta_i ~ N(0, v_i) observed through
// xi_i = beta_i + N(0, zeta).
DenoiseResult vamp_denoise(const Eigen::VectorXd& xi, double zeta, const Eigen::VectorXd& prior_var);
DenoiseResult vamp_denoise(const Eigen::VectorXd& xi, double zeta, const HorseshoeState& hs,
                           const std::vector<ColumnClass>& classes);

// Divides the belief N(mean_a, var_a) by the incoming message N(mean_b, var_b).
ExtrinsicResult vamp_extrinsic(const Eigen::VectorXd& mean_a, double var_a, const Eigen::VectorXd& mean_b, double var_b);

LmmseResult vamp_lmmse(const Eigen::VectorXd& xi_star, double zeta_star, const SvdCache& svd, const Eigen::VectorXd& y2,
                       double sigma2);

// (2 b + rss) / (2 a + T_r), floored at kSigma2Floor.
double em_update_sigma2(double residual_ss, Eigen::Index T_r, double a_sigma, double b_sigma);

// beta_var: per-coordinate posterior variances, used by the Expected form only
// (empty means zero).
HorseshoeState em_update_horseshoe(const Eigen::VectorXd& beta_bar, const HorseshoeState& hs,
                                   const std::vector<ColumnClass>& classes, EmForm form = EmForm::Expected,
                                   const Eigen::VectorXd& beta_var = {});

// E||y2 - Z2 beta||^2 for beta ~ N(beta_bar, C), C the linear-model belief
// covariance (Z2'Z2/sigma2 + I/zeta_star)^{-1}.
double expected_residual_ss(const Eigen::VectorXd& y2, const Eigen::MatrixXd& z2, const Eigen::VectorXd& beta_bar,
                            const SvdCache& svd, double sigma2, double zeta_star);

// Full VAMP cycle with EM updates; an empty `classes` treats every column as
// Dynamic. `initial` overrides the starting shrinkage state.
ApproxPosterior vamp_fit(const Eigen::VectorXd& y2, const Eigen::MatrixXd& z2, const VampConfig& config,
                         const std::vector<ColumnClass>& classes = {},
                         const HorseshoeState* initial = nullptr);

} // namespace irga
