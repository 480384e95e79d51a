#include <irga/vamp.hpp>

#include <irga/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace irga {

namespace {

double clamp_var(double v, std::size_t* counter = nullptr) {
  if (!(v >= kVarianceFloor)) { // also catches NaN
    if (counter) {
      ++*counter;
    }
    return kVarianceFloor;
  }
  if (v > kVarianceCeiling) {
    if (counter) {
      ++*counter;
    }
    return kVarianceCeiling;
  }
  return v;
}

LmmseResult lmmse_from_projection(const Eigen::VectorXd& xi_star, double zeta_star, const SvdCache& svd,
                                  const Eigen::VectorXd& uty, double sigma2) {
  const Eigen::Index K = svd.num_cols;
  // gain_r = 1 / (sigma2 / (zeta* d_r) + d_r)
  const Eigen::ArrayXd d = svd.d.array();
  const Eigen::ArrayXd gain = (sigma2 / (zeta_star * d) + d).inverse();
  const Eigen::VectorXd resid = uty.array() - d * (svd.v.transpose() * xi_star).array();
  LmmseResult out;
  out.beta_bar_star = xi_star + svd.v * (gain * resid.array()).matrix();
  const double trace = (d * gain).sum();
  out.s_star = zeta_star * (1.0 - trace / static_cast<double>(K));
  return out;
}

} // namespace

void VampConfig::validate() const {
  if (!(tol > 0.0)) {
    throw ValidationError("vamp.tol must be positive");
  }
  if (max_iter < 1) {
    throw ValidationError("vamp.max_iter must be at least 1");
  }
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw ValidationError("vamp.damping must lie in (0, 1]");
  }
  if (!(zeta_init > 0.0)) {
    throw ValidationError("vamp.zeta_init must be positive");
  }
  if (a_sigma < 0.0 || b_sigma < 0.0) {
    throw ValidationError("noise prior parameters must be non-negative");
  }
}

SvdCache SvdCache::compute(const Eigen::MatrixXd& design) {
  SvdCache c;
  c.num_cols = design.cols();
  if (design.size() == 0) {
    c.u.resize(design.rows(), 0);
    c.v.resize(design.cols(), 0);
    return c;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = 1e-12 * (sv.size() > 0 ? sv[0] : 0.0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv[r] > cutoff && sv[r] > 0.0) {
    ++r;
  }
  c.d = sv.head(r);
  c.u = svd.matrixU().leftCols(r);
  c.v = svd.matrixV().leftCols(r);
  return c;
}

HorseshoeState HorseshoeState::initial(Eigen::Index K) {
  HorseshoeState hs;
  hs.psi2 = Eigen::VectorXd::Ones(K);
  hs.nu = Eigen::VectorXd::Ones(K);
  return hs;
}

Eigen::VectorXd HorseshoeState::prior_variances(const std::vector<ColumnClass>& classes) const {
  Eigen::VectorXd v(psi2.size());
  for (Eigen::Index i = 0; i < psi2.size(); ++i) {
    const bool contemporaneous = !classes.empty() && classes[static_cast<std::size_t>(i)] == ColumnClass::Contemporaneous;
    v[i] = psi2[i] * (contemporaneous ? lambda2_u : lambda2_b);
  }
  return v;
}

bool HorseshoeState::valid() const {
  return psi2.size() == nu.size() && (psi2.array() > 0.0).all() && (nu.array() > 0.0).all() && lambda2_b > 0.0 &&
         lambda2_u > 0.0 && xi_aux_b > 0.0 && xi_aux_u > 0.0;
}

DenoiseResult vamp_denoise(const Eigen::VectorXd& xi, double zeta, const Eigen::VectorXd& prior_var) {
  DenoiseResult out;
  const Eigen::ArrayXd v = prior_var.array();
  const Eigen::ArrayXd shrink = v / (v + zeta);
  out.beta_bar = (xi.array() * shrink).matrix();
  out.s = xi.size() > 0 ? zeta * shrink.mean() : 0.0;
  out.s = std::max(out.s, kVarianceFloor);
  return out;
}

DenoiseResult vamp_denoise(const Eigen::VectorXd& xi, double zeta, const HorseshoeState& hs,
                           const std::vector<ColumnClass>& classes) {
  return vamp_denoise(xi, zeta, hs.prior_variances(classes));
}

ExtrinsicResult vamp_extrinsic(const Eigen::VectorXd& mean_a, double var_a, const Eigen::VectorXd& mean_b, double var_b) {
  ExtrinsicResult out;
  const double precision = 1.0 / var_a - 1.0 / var_b;
  if (!(precision >= 1e-12)) {
    // The belief is no sharper than the incoming message: send an almost flat
    // message centred on the belief mean.
    out.zeta = 1e12;
    out.xi = mean_a;
    out.clamped = true;
    return out;
  }
  out.zeta = 1.0 / precision;
  out.xi = (var_b * mean_a - var_a * mean_b) / (var_b - var_a);
  return out;
}

LmmseResult vamp_lmmse(const Eigen::VectorXd& xi_star, double zeta_star, const SvdCache& svd, const Eigen::VectorXd& y2,
                       double sigma2) {
  return lmmse_from_projection(xi_star, zeta_star, svd, svd.u.transpose() * y2, sigma2);
}

double em_update_sigma2(double residual_ss, Eigen::Index T_r, double a_sigma, double b_sigma) {
  const double s2 = (2.0 * b_sigma + residual_ss) / (2.0 * a_sigma + static_cast<double>(T_r));
  return std::max(s2, kSigma2Floor);
}

HorseshoeState em_update_horseshoe(const Eigen::VectorXd& beta_bar, const HorseshoeState& hs,
                                   const std::vector<ColumnClass>& classes, EmForm form,
                                   const Eigen::VectorXd& beta_var) {
  HorseshoeState out = hs;
  const Eigen::Index K = beta_bar.size();
  if (beta_var.size() != 0 && beta_var.size() != K) {
    throw ValidationError("em_update_horseshoe: variance vector does not match the coefficients");
  }
  const bool expected = form == EmForm::Expected;
  auto is_u = [&](Eigen::Index i) {
    return !classes.empty() && classes[static_cast<std::size_t>(i)] == ColumnClass::Contemporaneous;
  };
  auto bound = [](double x) { return std::clamp(x, kVarianceFloor, kVarianceCeiling); };
  auto second_moment = [&](Eigen::Index i) {
    const double m2 = beta_bar[i] * beta_bar[i];
    return expected && beta_var.size() == K ? m2 + beta_var[i] : m2;
  };

  Eigen::VectorXd inv_psi2(K);
  for (Eigen::Index i = 0; i < K; ++i) {
    const double inv_lambda2 = 1.0 / (is_u(i) ? hs.lambda2_u : hs.lambda2_b);
    const double nu_term = expected ? hs.nu[i] : 1.0 / hs.nu[i];
    inv_psi2[i] = bound(1.0 / (nu_term + 0.5 * second_moment(i) * inv_lambda2));
    out.psi2[i] = bound(1.0 / inv_psi2[i]);
  }

  double sum_b = 0.0;
  double sum_u = 0.0;
  Eigen::Index count_b = 0;
  Eigen::Index count_u = 0;
  for (Eigen::Index i = 0; i < K; ++i) {
    const double term = second_moment(i) * inv_psi2[i];
    if (is_u(i)) {
      sum_u += term;
      ++count_u;
    } else {
      sum_b += term;
      ++count_b;
    }
  }
  auto global = [&](Eigen::Index count, double sum, double xi_aux, double& lambda2, double& xi_out) {
    if (count == 0) {
      return;
    }
    const double xi_term = expected ? xi_aux : 1.0 / xi_aux;
    const double inv_lambda2 = bound((static_cast<double>(count) + 1.0) / (2.0 * xi_term + sum));
    lambda2 = bound(1.0 / inv_lambda2);
    xi_out = bound(1.0 / (1.0 + inv_lambda2));
  };
  global(count_b, sum_b, hs.xi_aux_b, out.lambda2_b, out.xi_aux_b);
  global(count_u, sum_u, hs.xi_aux_u, out.lambda2_u, out.xi_aux_u);

  for (Eigen::Index i = 0; i < K; ++i) {
    out.nu[i] = bound(1.0 / (1.0 + inv_psi2[i]));
  }
  return out;
}

double expected_residual_ss(const Eigen::VectorXd& y2, const Eigen::MatrixXd& z2, const Eigen::VectorXd& beta_bar,
                            const SvdCache& svd, double sigma2, double zeta_star) {
  // tr(Z2 C Z2') = sum_i d_i^2 sigma2 zeta* / (sigma2 + zeta* d_i^2)
  const Eigen::ArrayXd d2 = svd.d.array().square();
  const double spread = (d2 * sigma2 * zeta_star / (sigma2 + zeta_star * d2)).sum();
  return (y2 - z2 * beta_bar).squaredNorm() + spread;
}

ApproxPosterior vamp_fit(const Eigen::VectorXd& y2, const Eigen::MatrixXd& z2, const VampConfig& config,
                         const std::vector<ColumnClass>& classes, const HorseshoeState* initial) {
  config.validate();
  const Eigen::Index T_r = y2.size();
  const Eigen::Index K = z2.cols();
  if (z2.rows() != T_r) {
    throw ValidationError("vamp_fit: design has " + std::to_string(z2.rows()) + " rows but response has " +
                          std::to_string(T_r));
  }
  if (!classes.empty() && static_cast<Eigen::Index>(classes.size()) != K) {
    throw ValidationError("vamp_fit: column class list does not match the design width");
  }

  ApproxPosterior post;
  post.shrinkage = initial ? *initial : HorseshoeState::initial(K);
  if (K == 0) {
    post.mean.resize(0);
    post.var_scalar = 0.0;
    post.sigma2_hat = em_update_sigma2(y2.squaredNorm(), T_r, config.a_sigma, config.b_sigma);
    return post;
  }
  if (post.shrinkage.psi2.size() != K || !post.shrinkage.valid()) {
    throw ValidationError("vamp_fit: invalid initial shrinkage state");
  }

  const SvdCache svd = SvdCache::compute(z2);
  if (svd.rank() == 0) {
    throw ValidationError("vamp_fit: rotated design is identically zero");
  }
  const Eigen::VectorXd uty = svd.u.transpose() * y2;

  VampState st;
  st.xi = config.xi_init.size() == K ? config.xi_init : Eigen::VectorXd::Zero(K);
  st.zeta = config.zeta_init;
  st.sigma2 = config.sigma2_init > 0.0 ? config.sigma2_init
                                       : std::max(y2.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(T_r, 1)), kSigma2Floor);
  const double rho = config.damping;
  Eigen::VectorXd beta_prev;
  std::size_t clamps = 0;

  int iter = 0;
  bool converged = false;
  for (iter = 1; iter <= config.max_iter; ++iter) {
    DenoiseResult den = vamp_denoise(st.xi, st.zeta, post.shrinkage.prior_variances(classes));
    st.beta_bar = std::move(den.beta_bar);
    st.s = clamp_var(den.s, &clamps);

    ExtrinsicResult to_lik = vamp_extrinsic(st.beta_bar, st.s, st.xi, st.zeta);
    clamps += to_lik.clamped;
    if (iter == 1 || rho == 1.0) {
      st.xi_star = std::move(to_lik.xi);
      st.zeta_star = to_lik.zeta;
    } else {
      st.xi_star = rho * to_lik.xi + (1.0 - rho) * st.xi_star;
      st.zeta_star = rho * to_lik.zeta + (1.0 - rho) * st.zeta_star;
    }
    st.zeta_star = clamp_var(st.zeta_star, &clamps);

    LmmseResult lm = lmmse_from_projection(st.xi_star, st.zeta_star, svd, uty, st.sigma2);
    st.beta_bar_star = std::move(lm.beta_bar_star);
    st.s_star = clamp_var(lm.s_star, &clamps);

    ExtrinsicResult to_prior = vamp_extrinsic(st.beta_bar_star, st.s_star, st.xi_star, st.zeta_star);
    clamps += to_prior.clamped;
    st.xi = rho * to_prior.xi + (1.0 - rho) * st.xi;
    st.zeta = clamp_var(rho * to_prior.zeta + (1.0 - rho) * st.zeta, &clamps);

    const bool expected = config.em_form == EmForm::Expected;
    if (config.update_sigma2) {
      const double rss = expected ? expected_residual_ss(y2, z2, st.beta_bar, svd, st.sigma2, st.zeta_star)
                                  : (y2 - z2 * st.beta_bar).squaredNorm();
      st.sigma2 = em_update_sigma2(rss, T_r, config.a_sigma, config.b_sigma);
    }
    if (config.update_shrinkage) {
      Eigen::VectorXd coord_var;
      if (expected) {
        const Eigen::ArrayXd v = post.shrinkage.prior_variances(classes).array();
        coord_var = (st.zeta * v / (v + st.zeta)).matrix();
      }
      post.shrinkage = em_update_horseshoe(st.beta_bar, post.shrinkage, classes, config.em_form, coord_var);
    }

    const double delta2 = beta_prev.size() == K ? (st.beta_bar - beta_prev).squaredNorm()
                                                : std::numeric_limits<double>::infinity();
    if (config.record_trace) {
      post.trace.push_back({iter, delta2, st.s, st.sigma2});
    }
    beta_prev = st.beta_bar;
    if (delta2 < config.tol) {
      converged = true;
      break;
    }
  }

  post.mean = st.beta_bar;
  post.var_scalar = st.s;
  post.sigma2_hat = st.sigma2;
  post.converged = converged;
  post.iterations = std::min(iter, config.max_iter);
  post.clamp_count = clamps;
  return post;
}

} // namespace irga
