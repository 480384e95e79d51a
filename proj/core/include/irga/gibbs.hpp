#pragma once

#include <irga/random.hpp>
#include <irga/rotation.hpp>
#include <irga/vamp.hpp>

#include <Eigen/Dense>

#include <cstdint>

namespace irga {

// Gaussian likelihood for the own-lag block after plugging the approximate
// moments of the other-country block into the Q1 equation:
//   y_tilde ~ N(X_tilde a, Sigma),  Sigma = s * Z1 Z1' + sigma2 * I_k.
// Sigma is factored once; the posterior precision pieces X'Sigma^{-1}X and
// X'Sigma^{-1}y are cached.
class PluginLikelihood {
public:
  PluginLikelihood() = default;
  PluginLikelihood(Eigen::VectorXd y_tilde, Eigen::MatrixXd x_tilde, Eigen::MatrixXd sigma);

  static PluginLikelihood from_rotation(const RotationSplit& split, const ApproxPosterior& approx);

  // Same covariance and design, different response.
  PluginLikelihood with_response(const Eigen::VectorXd& y_tilde) const;

  const Eigen::VectorXd& y_tilde() const { return y_tilde_; }
  const Eigen::MatrixXd& x_tilde() const { return x_tilde_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::MatrixXd& sigma_cholesky() const { return sigma_l_; }
  const Eigen::MatrixXd& xt_si_x() const { return xt_si_x_; }
  const Eigen::VectorXd& xt_si_y() const { return xt_si_y_; }
  Eigen::Index k() const { return x_tilde_.cols(); }
  double sigma2() const { return sigma2_; }
  void set_sigma2(double s2) { sigma2_ = s2; }

private:
  Eigen::VectorXd y_tilde_;
  Eigen::MatrixXd x_tilde_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd sigma_l_;
  Eigen::MatrixXd xt_si_x_;
  Eigen::VectorXd xt_si_y_;
  double sigma2_ = 0.0;
};

// Horseshoe scales for a single coefficient group (the own-lag block).
struct HorseshoeScales {
  Eigen::VectorXd psi2;
  Eigen::VectorXd nu;
  double lambda2 = 1.0;
  double xi = 1.0;

  static HorseshoeScales initial(Eigen::Index k);
  Eigen::VectorXd prior_variances() const { return lambda2 * psi2; }
};

struct McmcConfig {
  int n_burn = 1000;
  int n_save = 2000;
  int thin = 1;
  std::uint64_t seed = 42;
  bool freeze_scales = false; // keep the Horseshoe scales at their initial values

  void validate() const;
};

struct ChainDraws {
  Eigen::MatrixXd a_draws;     // n_save x k
  Eigen::MatrixXd psi2_draws;  // n_save x k
  Eigen::VectorXd lambda2_draws;
  Eigen::VectorXd ess;         // effective sample size per coefficient
};

struct ConditionalMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd precision;
};

// Posterior N(mu_bar, S_bar) of the own-lag block given prior N(prior_mean,
// diag(prior_var)).
ConditionalMoments conditional_A_moments(const PluginLikelihood& pl, const Eigen::VectorXd& prior_mean,
                                         const Eigen::VectorXd& prior_var_diag);

Eigen::VectorXd conditional_A_draw(const PluginLikelihood& pl, const Eigen::VectorXd& prior_mean,
                                   const Eigen::VectorXd& prior_var_diag, Rng& rng);

HorseshoeScales horseshoe_gibbs_step(const Eigen::VectorXd& phi, const HorseshoeScales& hs, Rng& rng);

// Posterior shape of the global variance for a k-vector.
inline double lambda2_posterior_shape(Eigen::Index k) { return (static_cast<double>(k) + 1.0) / 2.0; }

ChainDraws run_equation_mcmc(const PluginLikelihood& pl, const McmcConfig& cfg,
                             const HorseshoeScales* initial = nullptr);

// Initial-positive-sequence autocorrelation estimate.
double effective_sample_size(const Eigen::VectorXd& chain);

} // namespace irga
