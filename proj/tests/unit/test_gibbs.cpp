#include <doctest.h>

#include <irga/error.hpp>
#include <irga/gibbs.hpp>
#include <irga/stats.hpp>

#include "test_support.hpp"

#include <cmath>

using namespace irga;
using irga::testing::gaussian_matrix;

namespace {

PluginLikelihood random_likelihood(std::uint64_t seed, int k) {
  Rng rng(seed);
  const Eigen::MatrixXd x = gaussian_matrix(rng, k, k);
  const Eigen::MatrixXd g = gaussian_matrix(rng, k, k);
  Eigen::MatrixXd sigma = 0.3 * g * g.transpose();
  sigma.diagonal().array() += 0.5;
  return PluginLikelihood(draw_std_normal(rng, k), x, sigma);
}

// Mean and its standard error, with the ESS standing in for n.
std::pair<double, double> mean_se(const Eigen::VectorXd& x) {
  const double m = x.mean();
  const double var = (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
  return {m, std::sqrt(var / effective_sample_size(x))};
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

TEST_CASE("config validation and defaults") {
  McmcConfig c;
  CHECK(c.n_burn == 1000);
  CHECK(c.n_save == 2000);
  CHECK(c.thin == 1);
  CHECK_NOTHROW(c.validate());
  c.n_save = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = McmcConfig{};
  c.thin = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("scalar posterior") {
  const PluginLikelihood pl(Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1));
  const auto m = conditional_A_moments(pl, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
  CHECK(m.mean(0) == doctest::Approx(1.0));
  CHECK(m.cov(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("flat and dogmatic prior limits") {
  const PluginLikelihood pl = random_likelihood(3, 4);
  const Eigen::LLT<Eigen::MatrixXd> s(pl.sigma());
  const Eigen::MatrixXd si_x = s.solve(pl.x_tilde());
  const Eigen::VectorXd gls =
      (pl.x_tilde().transpose() * si_x).ldlt().solve(si_x.transpose() * pl.y_tilde());
  const auto flat = conditional_A_moments(pl, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Constant(4, 1e12));
  CHECK((flat.mean - gls).cwiseAbs().maxCoeff() < 1e-6 * (1.0 + gls.cwiseAbs().maxCoeff()));

  const auto dogma = conditional_A_moments(pl, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Constant(4, 1e-12));
  CHECK(dogma.mean.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("posterior covariance inverts the precision") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(1e-3, 10.0);
  for (int rep = 0; rep < 50; ++rep) {
    const PluginLikelihood pl = random_likelihood(100 + rep, 1 + rep % 6);
    Eigen::VectorXd v(pl.k());
    for (auto& x : v) {
      x = u(rng);
    }
    const auto m = conditional_A_moments(pl, Eigen::VectorXd::Zero(pl.k()), v);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(pl.k(), pl.k());
    CHECK((m.cov * m.precision - id).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((m.cov - m.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(m.cov).info() == Eigen::Success);
  }
}

TEST_CASE("non-positive prior variances are rejected") {
  const PluginLikelihood pl = random_likelihood(3, 2);
  Rng rng(1);
  CHECK_THROWS_AS(conditional_A_draw(pl, Eigen::VectorXd::Zero(2), Eigen::Vector2d(1.0, 0.0), rng), ValidationError);
}

TEST_CASE("singular covariance is repaired by jitter, indefinite one fails") {
  CHECK_NOTHROW(PluginLikelihood(Eigen::Vector2d(1.0, 1.0), Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Ones(2, 2)));
  CHECK_THROWS_AS(PluginLikelihood(Eigen::Vector2d(1.0, 1.0), Eigen::MatrixXd::Identity(2, 2),
                                   -Eigen::MatrixXd::Identity(2, 2)),
                  ComputeError);
  CHECK_THROWS_AS(PluginLikelihood(Eigen::Vector3d(1.0, 1.0, 1.0), Eigen::MatrixXd::Identity(2, 2),
                                   Eigen::MatrixXd::Identity(2, 2)),
                  ValidationError);
}

TEST_CASE("conditional draws have the analytic moments") {
  const PluginLikelihood pl = random_likelihood(8, 3);
  const Eigen::VectorXd v = Eigen::Vector3d(0.5, 2.0, 1.0);
  const auto m = conditional_A_moments(pl, Eigen::VectorXd::Zero(3), v);
  Rng rng(9);
  const int n = 100000;
  Eigen::MatrixXd d(n, 3);
  for (int i = 0; i < n; ++i) {
    d.row(i) = conditional_A_draw(pl, Eigen::VectorXd::Zero(3), v, rng).transpose();
  }
  const Eigen::RowVectorXd mean = d.colwise().mean();
  const Eigen::MatrixXd centered = d.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1);
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(mean(j) - m.mean(j)) < 4.0 * std::sqrt(m.cov(j, j) / n));
  }
  CHECK((cov - m.cov).cwiseAbs().maxCoeff() < 0.03 * m.cov.diagonal().maxCoeff());
}

TEST_CASE("inverse gamma median") {
  // xi | lambda2 = 1 ~ IG(1, 2), median 2 / ln 2.
  Rng rng(10);
  std::vector<double> x(1000000);
  for (auto& v : x) {
    v = draw_inverse_gamma(rng, 1.0, 2.0);
  }
  CHECK(median(x) == doctest::Approx(2.0 / std::log(2.0)).epsilon(0.01));
}

TEST_CASE("global scale shape") {
  CHECK(lambda2_posterior_shape(1) == 1.0);
  CHECK(lambda2_posterior_shape(4) == 2.5);
}

TEST_CASE("zero coefficients draw the scales from their prior conditionals") {
  const int k = 3;
  HorseshoeScales hs = HorseshoeScales::initial(k);
  hs.nu = Eigen::Vector3d(0.5, 1.0, 2.0);
  hs.xi = 0.5;
  Rng rng(12);
  const int n = 100000;
  Eigen::MatrixXd inv_psi2(n, k);
  Eigen::VectorXd inv_lambda2(n);
  for (int i = 0; i < n; ++i) {
    const HorseshoeScales out = horseshoe_gibbs_step(Eigen::VectorXd::Zero(k), hs, rng);
    inv_psi2.row(i) = out.psi2.cwiseInverse().transpose();
    inv_lambda2(i) = 1.0 / out.lambda2;
  }
  // 1/psi2 ~ Gamma(1, rate 1/nu): mean nu. 1/lambda2 ~ Gamma((k+1)/2, rate 1/xi).
  for (int j = 0; j < k; ++j) {
    CHECK(inv_psi2.col(j).mean() == doctest::Approx(hs.nu(j)).epsilon(0.02));
  }
  CHECK(inv_lambda2.mean() == doctest::Approx(lambda2_posterior_shape(k) * hs.xi).epsilon(0.02));
}

TEST_CASE("scale draws stay in the clamp range") {
  Rng rng(13);
  HorseshoeScales hs = HorseshoeScales::initial(2);
  for (int i = 0; i < 1000; ++i) {
    hs = horseshoe_gibbs_step(Eigen::Vector2d(0.0, 1e150), hs, rng);
    CHECK(hs.psi2.minCoeff() >= kVarianceFloor);
    CHECK(hs.psi2.maxCoeff() <= kVarianceCeiling);
    CHECK(hs.lambda2 >= kVarianceFloor);
    CHECK(hs.lambda2 <= kVarianceCeiling);
    CHECK(std::isfinite(hs.xi));
  }
}

TEST_CASE("effective sample size") {
  Rng rng(14);
  const int n = 20000;
  const Eigen::VectorXd iid = draw_std_normal(rng, n);
  CHECK(effective_sample_size(iid) == doctest::Approx(n).epsilon(0.15));
  Eigen::VectorXd ar(n);
  ar(0) = 0.0;
  const Eigen::VectorXd e = draw_std_normal(rng, n);
  for (int t = 1; t < n; ++t) {
    ar(t) = 0.9 * ar(t - 1) + e(t);
  }
  CHECK(effective_sample_size(ar) == doctest::Approx(n * 0.1 / 1.9).epsilon(0.3));
  CHECK(effective_sample_size(Eigen::VectorXd::Ones(10)) == 10.0);
}

TEST_CASE("frozen scales: chain mean matches the analytic posterior mean") {
  const PluginLikelihood pl = random_likelihood(15, 3);
  McmcConfig cfg;
  cfg.n_save = 5000;
  cfg.freeze_scales = true;
  cfg.seed = 16;
  const ChainDraws chain = run_equation_mcmc(pl, cfg);
  const auto m = conditional_A_moments(pl, Eigen::VectorXd::Zero(3), HorseshoeScales::initial(3).prior_variances());
  for (int j = 0; j < 3; ++j) {
    const auto [mean, se] = mean_se(chain.a_draws.col(j));
    CHECK(std::abs(mean - m.mean(j)) < 3.0 * se);
  }
}

TEST_CASE("chain shape and determinism") {
  const PluginLikelihood pl = random_likelihood(17, 4);
  McmcConfig cfg;
  cfg.n_burn = 100;
  cfg.n_save = 300;
  cfg.thin = 3;
  cfg.seed = 99;
  const ChainDraws a = run_equation_mcmc(pl, cfg);
  const ChainDraws b = run_equation_mcmc(pl, cfg);
  CHECK(a.a_draws.rows() == 300);
  CHECK(a.a_draws.cols() == 4);
  CHECK(a.psi2_draws.rows() == 300);
  CHECK(a.lambda2_draws.size() == 300);
  CHECK(a.ess.size() == 4);
  CHECK(a.a_draws.allFinite());
  CHECK(a.a_draws == b.a_draws);
  CHECK(a.psi2_draws == b.psi2_draws);
  CHECK(a.lambda2_draws == b.lambda2_draws);
  cfg.seed = 100;
  CHECK(run_equation_mcmc(pl, cfg).a_draws != a.a_draws);
}

TEST_CASE("thinning leaves the chain means unchanged") {
  const PluginLikelihood pl = random_likelihood(18, 3);
  McmcConfig cfg;
  cfg.n_save = 20000;
  cfg.seed = 19;
  const ChainDraws a = run_equation_mcmc(pl, cfg);
  cfg.n_save = 4000;
  cfg.thin = 5;
  cfg.seed = 20;
  const ChainDraws b = run_equation_mcmc(pl, cfg);
  for (int j = 0; j < 3; ++j) {
    const auto [ma, sa] = mean_se(a.a_draws.col(j));
    const auto [mb, sb] = mean_se(b.a_draws.col(j));
    CHECK(std::abs(ma - mb) < 3.0 * std::hypot(sa, sb));
  }
}

TEST_CASE("uninformative likelihood recovers the prior predictive") {
  const int k = 2;
  const PluginLikelihood pl(Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Identity(k, k),
                            1e12 * Eigen::MatrixXd::Identity(k, k));
  auto clip = [](double a) { return std::clamp(a, -10.0, 10.0); };

  Rng rng(21);
  const int n_prior = 100000;
  Eigen::VectorXd prior(n_prior);
  for (int m = 0; m < n_prior; ++m) {
    const double xi = draw_inverse_gamma(rng, 0.5, 1.0);
    const double lambda2 = draw_inverse_gamma(rng, 0.5, 1.0 / xi);
    const double nu = draw_inverse_gamma(rng, 0.5, 1.0);
    const double psi2 = draw_inverse_gamma(rng, 0.5, 1.0 / nu);
    prior(m) = clip(std::sqrt(lambda2 * psi2) * draw_std_normal(rng, 1)(0));
  }

  McmcConfig cfg;
  cfg.n_burn = 1000;
  cfg.n_save = 200000;
  cfg.seed = 22;
  const ChainDraws chain = run_equation_mcmc(pl, cfg);
  for (int j = 0; j < k; ++j) {
    const Eigen::VectorXd a = chain.a_draws.col(j).unaryExpr(clip);
    for (int power = 1; power <= 2; ++power) {
      const auto [mp, sp] = mean_se(prior.array().pow(power).matrix());
      const auto [mc, sc] = mean_se(a.array().pow(power).matrix());
      CHECK(std::abs(mp - mc) < 3.0 * std::hypot(sp, sc));
    }
  }
}

TEST_CASE("invalid initial scales") {
  const PluginLikelihood pl = random_likelihood(23, 3);
  const HorseshoeScales hs = HorseshoeScales::initial(2);
  CHECK_THROWS_AS(run_equation_mcmc(pl, McmcConfig{}, &hs), ValidationError);
}

TEST_CASE("with_response matches a fresh likelihood") {
  const PluginLikelihood pl = random_likelihood(24, 3);
  const Eigen::VectorXd y = Eigen::Vector3d(0.1, -0.4, 2.0);
  const PluginLikelihood a = pl.with_response(y);
  const PluginLikelihood b(y, pl.x_tilde(), pl.sigma());
  CHECK((a.xt_si_y() - b.xt_si_y()).cwiseAbs().maxCoeff() < 1e-12);
}
