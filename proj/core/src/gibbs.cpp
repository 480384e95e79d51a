#include <irga/gibbs.hpp>

#include <irga/error.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

namespace irga {

namespace {

// Cholesky with the jitter policy: plain attempt, then 1e-10, 1e-9, 1e-8
// times the mean diagonal.
std::optional<Eigen::LLT<Eigen::MatrixXd>> jittered_llt(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) {
    return llt;
  }
  const double base = std::max(m.diagonal().mean(), 1e-300);
  double scale = 1e-10;
  for (int attempt = 0; attempt < 3; ++attempt, scale *= 10.0) {
    Eigen::MatrixXd jittered = m;
    jittered.diagonal().array() += scale * base;
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) {
      return llt;
    }
  }
  return std::nullopt;
}

double bounded(double x) { return std::clamp(x, kVarianceFloor, kVarianceCeiling); }

} // namespace

PluginLikelihood::PluginLikelihood(Eigen::VectorXd y_tilde, Eigen::MatrixXd x_tilde, Eigen::MatrixXd sigma)
    : y_tilde_(std::move(y_tilde)), x_tilde_(std::move(x_tilde)), sigma_(std::move(sigma)) {
  const Eigen::Index k = x_tilde_.rows();
  if (y_tilde_.size() != k || sigma_.rows() != k || sigma_.cols() != k) {
    throw ValidationError("plug-in likelihood: inconsistent dimensions");
  }
  auto llt = jittered_llt(sigma_);
  if (!llt) {
    throw ComputeError("plug-in likelihood covariance is not positive definite");
  }
  sigma_l_ = llt->matrixL();
  const Eigen::MatrixXd si_x = llt->solve(x_tilde_);
  xt_si_x_ = x_tilde_.transpose() * si_x;
  xt_si_x_ = 0.5 * (xt_si_x_ + xt_si_x_.transpose()).eval();
  xt_si_y_ = si_x.transpose() * y_tilde_;
}

PluginLikelihood PluginLikelihood::from_rotation(const RotationSplit& split, const ApproxPosterior& approx) {
  const Eigen::Index k = split.x1.rows();
  Eigen::VectorXd y_tilde = split.y1;
  Eigen::MatrixXd sigma = approx.sigma2_hat * Eigen::MatrixXd::Identity(k, k);
  if (split.z1.cols() > 0) {
    y_tilde.noalias() -= split.z1 * approx.mean;
    sigma.noalias() += approx.var_scalar * split.z1 * split.z1.transpose();
  }
  PluginLikelihood pl(std::move(y_tilde), split.x1, std::move(sigma));
  pl.sigma2_ = approx.sigma2_hat;
  return pl;
}

PluginLikelihood PluginLikelihood::with_response(const Eigen::VectorXd& y_tilde) const {
  if (y_tilde.size() != y_tilde_.size()) {
    throw ValidationError("plug-in likelihood: response has the wrong length");
  }
  PluginLikelihood out = *this;
  out.y_tilde_ = y_tilde;
  const Eigen::VectorXd si_y = sigma_l_.transpose().triangularView<Eigen::Upper>().solve(
      sigma_l_.triangularView<Eigen::Lower>().solve(y_tilde));
  out.xt_si_y_ = x_tilde_.transpose() * si_y;
  return out;
}

HorseshoeScales HorseshoeScales::initial(Eigen::Index k) {
  HorseshoeScales hs;
  hs.psi2 = Eigen::VectorXd::Ones(k);
  hs.nu = Eigen::VectorXd::Ones(k);
  return hs;
}

void McmcConfig::validate() const {
  if (n_burn < 0 || n_save < 1 || thin < 1) {
    throw ValidationError("mcmc: burn-in must be non-negative, save count and thinning positive");
  }
}

ConditionalMoments conditional_A_moments(const PluginLikelihood& pl, const Eigen::VectorXd& prior_mean,
                                         const Eigen::VectorXd& prior_var_diag) {
  const Eigen::Index k = pl.k();
  if (prior_mean.size() != k || prior_var_diag.size() != k) {
    throw ValidationError("conditional_A: prior dimensions do not match the likelihood");
  }
  if (!(prior_var_diag.array() > 0.0).all()) {
    throw ValidationError("conditional_A: prior variances must be positive");
  }
  ConditionalMoments m;
  m.precision = pl.xt_si_x();
  m.precision.diagonal() += prior_var_diag.cwiseInverse();
  auto llt = jittered_llt(m.precision);
  if (!llt) {
    throw ComputeError("posterior precision of the own-lag block is not positive definite");
  }
  const Eigen::VectorXd rhs = prior_mean.cwiseQuotient(prior_var_diag) + pl.xt_si_y();
  m.mean = llt->solve(rhs);
  m.cov = llt->solve(Eigen::MatrixXd::Identity(k, k));
  return m;
}

Eigen::VectorXd conditional_A_draw(const PluginLikelihood& pl, const Eigen::VectorXd& prior_mean,
                                   const Eigen::VectorXd& prior_var_diag, Rng& rng) {
  const Eigen::Index k = pl.k();
  if (prior_mean.size() != k || prior_var_diag.size() != k) {
    throw ValidationError("conditional_A: prior dimensions do not match the likelihood");
  }
  if (!(prior_var_diag.array() > 0.0).all()) {
    throw ValidationError("conditional_A: prior variances must be positive");
  }
  Eigen::MatrixXd precision = pl.xt_si_x();
  precision.diagonal() += prior_var_diag.cwiseInverse();
  auto llt = jittered_llt(precision);
  if (!llt) {
    throw ComputeError("posterior precision of the own-lag block is not positive definite");
  }
  const Eigen::VectorXd rhs = prior_mean.cwiseQuotient(prior_var_diag) + pl.xt_si_y();
  Eigen::VectorXd draw = llt->solve(rhs);
  // precision = L L'; L' e = z gives e ~ N(0, precision^{-1}).
  draw += llt->matrixU().solve(draw_std_normal(rng, k));
  return draw;
}

HorseshoeScales horseshoe_gibbs_step(const Eigen::VectorXd& phi, const HorseshoeScales& hs, Rng& rng) {
  const Eigen::Index k = phi.size();
  HorseshoeScales out = hs;
  for (Eigen::Index j = 0; j < k; ++j) {
    out.psi2[j] = bounded(draw_inverse_gamma(rng, 1.0, 1.0 / hs.nu[j] + phi[j] * phi[j] / (2.0 * hs.lambda2)));
  }
  const double rate = 1.0 / hs.xi + (phi.array().square() / (2.0 * out.psi2.array())).sum();
  out.lambda2 = bounded(draw_inverse_gamma(rng, lambda2_posterior_shape(k), rate));
  for (Eigen::Index j = 0; j < k; ++j) {
    out.nu[j] = bounded(draw_inverse_gamma(rng, 1.0, 1.0 + 1.0 / out.psi2[j]));
  }
  out.xi = bounded(draw_inverse_gamma(rng, 1.0, 1.0 + 1.0 / out.lambda2));
  return out;
}

double effective_sample_size(const Eigen::VectorXd& chain) {
  const Eigen::Index n = chain.size();
  if (n < 4) {
    return static_cast<double>(n);
  }
  const Eigen::ArrayXd x = chain.array() - chain.mean();
  const double c0 = x.square().sum() / static_cast<double>(n);
  if (!(c0 > 0.0)) {
    return static_cast<double>(n);
  }
  auto autocorr = [&](Eigen::Index lag) {
    return (x.head(n - lag) * x.tail(n - lag)).sum() / static_cast<double>(n) / c0;
  };
  double sum = 0.0;
  for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
    const double pair = autocorr(2 * m) + autocorr(2 * m + 1);
    if (pair <= 0.0) {
      break;
    }
    sum += pair;
  }
  const double tau = std::max(2.0 * sum - 1.0, 1e-12);
  return std::min(static_cast<double>(n) / tau, static_cast<double>(n) * std::log10(static_cast<double>(n)));
}

ChainDraws run_equation_mcmc(const PluginLikelihood& pl, const McmcConfig& cfg, const HorseshoeScales* initial) {
  cfg.validate();
  const Eigen::Index k = pl.k();
  Rng rng(cfg.seed);
  HorseshoeScales hs = initial ? *initial : HorseshoeScales::initial(k);
  if (hs.psi2.size() != k) {
    throw ValidationError("mcmc: initial scales have the wrong dimension");
  }
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(k);

  ChainDraws out;
  out.a_draws.resize(cfg.n_save, k);
  out.psi2_draws.resize(cfg.n_save, k);
  out.lambda2_draws.resize(cfg.n_save);

  const long total = static_cast<long>(cfg.n_burn) + static_cast<long>(cfg.n_save) * cfg.thin;
  Eigen::Index saved = 0;
  for (long it = 0; it < total; ++it) {
    const Eigen::VectorXd a = conditional_A_draw(pl, zero, hs.prior_variances(), rng);
    if (!cfg.freeze_scales) {
      hs = horseshoe_gibbs_step(a, hs, rng);
    }
    const long kept = it - cfg.n_burn;
    if (kept >= 0 && (kept + 1) % cfg.thin == 0) {
      out.a_draws.row(saved) = a.transpose();
      out.psi2_draws.row(saved) = hs.psi2.transpose();
      out.lambda2_draws[saved] = hs.lambda2;
      ++saved;
    }
  }
  out.ess.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    out.ess[j] = effective_sample_size(out.a_draws.col(j));
  }
  return out;
}

} // namespace irga
