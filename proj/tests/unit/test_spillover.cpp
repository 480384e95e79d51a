#include <doctest.h>

#include <irga/error.hpp>
#include <irga/io/simulate.hpp>
#include <irga/spillover.hpp>

#include "test_support.hpp"

#include <algorithm>
#include <cmath>

using namespace irga;

namespace {

SystemDraw system(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& u, const Eigen::VectorXd& h) {
  SystemDraw sd;
  sd.phi = phi;
  sd.u = u;
  sd.h = h;
  return sd;
}

FevdMatrix shares(const Eigen::MatrixXd& s) {
  FevdMatrix f;
  f.shares = s;
  return f;
}

} // namespace

TEST_CASE("univariate system") {
  const auto f = fevd(system(Eigen::MatrixXd::Constant(1, 2, 0.4), Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1)), 12);
  REQUIRE(f);
  CHECK(f->shares.rows() == 1);
  CHECK(f->shares(0, 0) == doctest::Approx(1.0));
  CHECK(f->horizon == 12);
}

TEST_CASE("decoupled system is all own variance") {
  const Eigen::MatrixXd phi = Eigen::Vector3d(0.5, -0.2, 0.9).asDiagonal();
  const auto f = fevd(system(phi, Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(1.0, 2.0, 0.5)), 12);
  REQUIRE(f);
  CHECK((f->shares - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("bivariate system against a Monte-Carlo decomposition") {
  Eigen::MatrixXd phi(2, 2);
  phi << 0.5, 0.2, 0.0, 0.5;
  const SystemDraw sd = system(phi, Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Ones(2));
  const int H = 12;
  const auto f = fevd(sd, H);
  REQUIRE(f);

  // Simulate the H-step forecast error with one shock switched on at a time.
  Rng rng(1);
  const int paths = 200000;
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(2, 2); // (variable, shock)
  for (int b = 0; b < 2; ++b) {
    Eigen::MatrixXd end(paths, 2);
    for (int m = 0; m < paths; ++m) {
      Eigen::Vector2d y = Eigen::Vector2d::Zero();
      for (int h = 0; h < H; ++h) {
        Eigen::Vector2d e = Eigen::Vector2d::Zero();
        e(b) = draw_std_normal(rng, 1)(0);
        y = phi * y + e;
      }
      end.row(m) = y.transpose();
    }
    var.col(b) = end.array().square().colwise().mean().transpose();
  }
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      CHECK(std::abs(f->shares(a, b) - var(a, b) / var.row(a).sum()) < 0.01);
    }
  }
  CHECK(f->shares(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("FEVD matches the companion-form forecast error variance") {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 2 + rep % 4;
    const int p = 1 + rep % 3;
    const int H = 1 + rep;
    Eigen::MatrixXd u = 0.5 * irga::testing::gaussian_matrix(rng, n, n);
    u = u.triangularView<Eigen::StrictlyLower>();
    u.diagonal().setOnes();
    const Eigen::VectorXd h = Eigen::VectorXd::LinSpaced(n, 0.5, 2.0);
    const SystemDraw sd = system(0.3 / p * irga::testing::gaussian_matrix(rng, n, n * p), u, h);
    const auto f = fevd(sd, H);
    REQUIRE(f);

    // Companion iteration of the impact matrix.
    const int np = n * p;
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(np, np);
    comp.topRows(n) = sd.phi;
    if (p > 1) {
      comp.bottomLeftCorner(np - n, np - n).setIdentity();
    }
    Eigen::MatrixXd state = Eigen::MatrixXd::Zero(np, n);
    state.topRows(n) = u * h.cwiseSqrt().asDiagonal();
    Eigen::MatrixXd contrib = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < H; ++s) {
      contrib += state.topRows(n).array().square().matrix();
      state = comp * state;
    }
    const Eigen::MatrixXd oracle = contrib.array().colwise() / contrib.rowwise().sum().array();
    CHECK((f->shares - oracle).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((f->shares.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
    CHECK(f->shares.minCoeff() >= 0.0);
    CHECK(f->shares.maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("explosive draws survive in extended precision, overflow is flagged") {
  const Eigen::MatrixXd u = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd phi(2, 2);
  phi << 1e30, 1.0, 0.0, 2.0;
  const auto big = fevd(system(phi, u, Eigen::VectorXd::Ones(2)), 12);
  REQUIRE(big);
  CHECK(big->shares.allFinite());
  CHECK((big->shares.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
  phi(0, 0) = 1e300;
  CHECK_FALSE(fevd(system(phi, u, Eigen::VectorXd::Ones(2)), 12).has_value());
  CHECK_THROWS_AS(fevd(system(phi, u, Eigen::VectorXd::Ones(2)), 0), ValidationError);
}

TEST_CASE("total index") {
  const std::vector<int> two{0, 1};
  CHECK(dy_total_cross_country(shares(Eigen::MatrixXd::Identity(2, 2)), two) == 0.0);
  CHECK(dy_total_cross_country(shares(Eigen::MatrixXd::Constant(2, 2, 0.5)), two) == doctest::Approx(0.5));
  CHECK(dy_total_cross_country(shares(Eigen::MatrixXd::Constant(2, 2, 0.5)), {0, 0}) == 0.0);
  // Block diagonal by country with within-country mixing.
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(4, 4);
  s.topLeftCorner(2, 2).setConstant(0.5);
  s.bottomRightCorner(2, 2).setConstant(0.5);
  CHECK(dy_total_cross_country(shares(s), {0, 0, 1, 1}) == 0.0);
}

TEST_CASE("total index is a share and vanishes only without foreign mass") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 4;
    Eigen::MatrixXd u = 0.7 * irga::testing::gaussian_matrix(rng, n, n);
    u = u.triangularView<Eigen::StrictlyLower>();
    u.diagonal().setOnes();
    const auto f = fevd(system(0.2 * irga::testing::gaussian_matrix(rng, n, n), u, Eigen::VectorXd::Ones(n)), 6);
    REQUIRE(f);
    const double t = dy_total_cross_country(*f, {0, 0, 1, 1});
    CHECK(t >= 0.0);
    CHECK(t <= 1.0);
    CHECK(t > 1e-10);
  }
}

TEST_CASE("by-variable index") {
  SUBCASE("decoupled") {
    const auto out = dy_by_variable(shares(Eigen::MatrixXd::Identity(4, 4)), {0, 0, 1, 1}, {"IP", "CPI", "IP", "CPI"});
    CHECK(out.at("IP") == 0.0);
    CHECK(out.at("CPI") == 0.0);
  }
  SUBCASE("symmetric two-country, one type") {
    const auto out = dy_by_variable(shares(Eigen::MatrixXd::Constant(2, 2, 0.5)), {0, 1}, {"IP", "IP"});
    CHECK(out.size() == 1);
    CHECK(out.at("IP") == doctest::Approx(0.5));
  }
  SUBCASE("type in one country only") {
    const auto out = dy_by_variable(shares(Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0)), {0, 0, 1}, {"IP", "U", "IP"});
    CHECK(out.at("U") == 0.0);
  }
  SUBCASE("restricted rows are renormalised") {
    // Row IP of country 0: 0.2 own IP, 0.2 foreign IP, 0.6 elsewhere.
    Eigen::MatrixXd s(4, 4);
    s << 0.2, 0.3, 0.2, 0.3,
         0.0, 1.0, 0.0, 0.0,
         0.1, 0.0, 0.3, 0.6,
         0.0, 0.0, 0.0, 1.0;
    const auto out = dy_by_variable(shares(s), {0, 0, 1, 1}, {"IP", "CPI", "IP", "CPI"});
    CHECK(out.at("IP") == doctest::Approx((0.5 + 0.25) / 2.0));
    CHECK(out.at("CPI") == 0.0);
  }
}

TEST_CASE("by-country index") {
  CHECK(dy_by_country(shares(Eigen::MatrixXd::Identity(3, 3)), {0, 1, 1}) == std::vector<double>{0.0, 0.0});
  const auto sym = dy_by_country(shares(Eigen::MatrixXd::Constant(2, 2, 0.5)), {0, 1});
  CHECK(sym[0] == doctest::Approx(0.5));
  CHECK(sym[1] == doctest::Approx(0.5));
  Eigen::MatrixXd s(2, 2);
  s << 0.0, 1.0, 0.0, 1.0;
  CHECK(dy_by_country(shares(s), {0, 1})[0] == 1.0);
}

TEST_CASE("indices ignore the order of posterior draws and count exclusions") {
  Rng rng(4);
  std::vector<SystemDraw> draws;
  for (int d = 0; d < 30; ++d) {
    Eigen::MatrixXd u = Eigen::MatrixXd::Identity(4, 4);
    u(2, 0) = 0.3 * d / 30.0;
    draws.push_back(system(0.2 * irga::testing::gaussian_matrix(rng, 4, 4), u, Eigen::VectorXd::Ones(4)));
  }
  Eigen::MatrixXd boom = Eigen::MatrixXd::Zero(4, 4);
  boom(0, 0) = 1e300;
  draws.push_back(system(boom, Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Ones(4)));
  const std::vector<int> countries{0, 0, 1, 1};
  const std::vector<std::string> types{"IP", "CPI", "IP", "CPI"};
  const auto a = spillover_indices(draws, 12, countries, types, 2);
  std::shuffle(draws.begin(), draws.end(), rng);
  const auto b = spillover_indices(draws, 12, countries, types, 2);
  CHECK(a.excluded == 1);
  CHECK(a.total.size() == 30);
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted(a.total) == sorted(b.total));
  CHECK(sorted(a.by_variable.at("IP")) == sorted(b.by_variable.at("IP")));
  CHECK(sorted(a.by_country[1]) == sorted(b.by_country[1]));
  const BandSummary ba = summarize_bands(a.total);
  const BandSummary bb = summarize_bands(b.total);
  CHECK(ba.median == bb.median);
  CHECK(ba.q05 == bb.q05);
}

TEST_CASE("expanding-window recursion on a constant process") {
  io::SimulationSpec spec;
  spec.countries = 2;
  spec.vars = 2;
  spec.T = 320;
  spec.sparsity = 0.5;
  spec.seed = 77;
  const auto sim = io::simulate_panel(spec);
  PvarOptions opts;
  opts.mcmc.n_burn = 200;
  opts.mcmc.n_save = 300;
  const std::vector<int> ends{200, 230, 260, 290, 320};
  const auto res = spillover_recursion(sim.data, make_irga_sampler(opts, true), 12, ends, 9);
  CHECK(res.failures.empty());
  REQUIRE(res.total.size() == 1);
  const auto& pts = res.total.front().points;
  REQUIRE(pts.size() == ends.size());
  double mean = 0.0;
  for (const auto& p : pts) {
    mean += p.bands.median / pts.size();
  }
  for (const auto& p : pts) {
    CHECK(std::abs(p.bands.median - mean) <= 0.05);
  }
  CHECK(res.by_variable.size() == 2);
  CHECK(res.by_country.size() == 2);
  for (const auto* list : {&res.total, &res.by_variable, &res.by_country}) {
    for (const auto& s : *list) {
      for (const auto& p : s.points) {
        CHECK(p.bands.q05 <= p.bands.q16);
        CHECK(p.bands.q16 <= p.bands.median);
        CHECK(p.bands.median <= p.bands.q84);
        CHECK(p.bands.q84 <= p.bands.q95);
        CHECK(p.bands.q05 >= 0.0);
        CHECK(p.bands.q95 <= 1.0);
        CHECK(p.excluded >= 0);
        CHECK(p.draws.size() + static_cast<std::size_t>(p.excluded) == 300);
      }
    }
  }
  CHECK(pts.front().window_end == sim.data.time_index()[199].str());
}

TEST_CASE("true system gives the same index in every window") {
  io::SimulationSpec spec;
  spec.countries = 3;
  spec.vars = 1;
  spec.seed = 5;
  const auto sim = io::simulate_panel(spec);
  const SystemSampler truth = [&](const PanelDataset&, Rng&) { return std::vector<SystemDraw>(5, sim.truth); };
  const auto res = spillover_recursion(sim.data, truth, 12, {50, 100, 150}, 1);
  const double expected = dy_total_cross_country(*fevd(sim.truth, 12), sim.data.country_map());
  for (const auto& p : res.total.front().points) {
    CHECK(p.bands.median == doctest::Approx(expected));
    CHECK(p.bands.q05 == doctest::Approx(expected));
  }
}

TEST_CASE("failing window is flagged and the rest continue") {
  const auto ds = irga::testing::noise_panel({1, 1}, 60);
  const SystemSampler sampler = [](const PanelDataset& w, Rng&) -> std::vector<SystemDraw> {
    if (w.T() == 40) {
      throw ComputeError("no draws");
    }
    return {system(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Ones(2))};
  };
  const auto res = spillover_recursion(ds, sampler, 4, {30, 40, 50}, 1);
  REQUIRE(res.failures.size() == 1);
  CHECK(res.failures.front().find(ds.time_index()[39].str()) == 0);
  CHECK(res.total.front().points.size() == 2);
  CHECK_THROWS_AS(spillover_recursion(ds, sampler, 4, {}, 1), ValidationError);
}
