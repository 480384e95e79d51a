#include <irga/gibbs.hpp>
#include <irga/io/simulate.hpp>
#include <irga/pvar.hpp>
#include <irga/rotation.hpp>
#include <irga/vamp.hpp>

#include <benchmark/benchmark.h>

namespace {

Eigen::MatrixXd gaussian(irga::Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    m.col(j) = irga::draw_std_normal(rng, r);
  }
  return m;
}

// Rotation of a T x k own block against a T x K other block.
void BM_Rotation(benchmark::State& state) {
  const auto T = state.range(0);
  const auto K = state.range(1);
  irga::Rng rng(1);
  const Eigen::MatrixXd x = gaussian(rng, T, 8);
  const Eigen::MatrixXd z = gaussian(rng, T, K);
  const Eigen::VectorXd y = irga::draw_std_normal(rng, T);
  for (auto _ : state) {
    benchmark::DoNotOptimize(irga::qr_rotation(x, y, z));
  }
}
BENCHMARK(BM_Rotation)->Args({250, 200})->Args({250, 600});

void BM_VampFit(benchmark::State& state) {
  const auto T = state.range(0);
  const auto K = state.range(1);
  irga::Rng rng(2);
  const Eigen::MatrixXd z = gaussian(rng, T, K);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(K);
  for (Eigen::Index i = 0; i < K; i += 20) {
    beta(i) = 1.0;
  }
  const Eigen::VectorXd y = z * beta + 0.5 * irga::draw_std_normal(rng, T);
  const irga::VampConfig cfg;
  int iterations = 0;
  for (auto _ : state) {
    const auto post = irga::vamp_fit(y, z, cfg);
    iterations = post.iterations;
    benchmark::DoNotOptimize(post.mean.data());
  }
  state.counters["vamp_iter"] = iterations;
}
BENCHMARK(BM_VampFit)->Args({240, 200})->Args({240, 600})->Unit(benchmark::kMillisecond);

void BM_EquationMcmc(benchmark::State& state) {
  const auto k = state.range(0);
  irga::Rng rng(3);
  const Eigen::MatrixXd x = gaussian(rng, k, k);
  const Eigen::MatrixXd g = gaussian(rng, k, k);
  Eigen::MatrixXd sigma = g * g.transpose();
  sigma.diagonal().array() += 1.0;
  const irga::PluginLikelihood pl(irga::draw_std_normal(rng, k), x, sigma);
  irga::McmcConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(irga::run_equation_mcmc(pl, cfg).a_draws.data());
  }
}
BENCHMARK(BM_EquationMcmc)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_EstimatePanel(benchmark::State& state) {
  irga::io::SimulationSpec spec;
  spec.countries = static_cast<int>(state.range(0));
  spec.vars = 4;
  spec.lags = 2;
  spec.T = 240;
  const auto sim = irga::io::simulate_panel(spec);
  irga::PvarOptions opts;
  opts.lags = 2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(irga::estimate_pvar(sim.data, opts).equations.data());
  }
}
BENCHMARK(BM_EstimatePanel)->Arg(3)->Arg(5)->Unit(benchmark::kSecond)->Iterations(1);

} // namespace
