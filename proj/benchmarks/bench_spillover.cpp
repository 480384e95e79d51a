#include <irga/io/simulate.hpp>
#include <irga/spillover.hpp>

#include <benchmark/benchmark.h>

namespace {

void BM_Fevd(benchmark::State& state) {
  irga::io::SimulationSpec spec;
  spec.countries = static_cast<int>(state.range(0));
  spec.vars = 4;
  spec.lags = 2;
  spec.T = 10;
  spec.sparsity = 0.5 / spec.countries; // keeps large panels stable
  const auto sim = irga::io::simulate_panel(spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(irga::fevd(sim.truth, 12));
  }
}
BENCHMARK(BM_Fevd)->Arg(3)->Arg(8)->Arg(15);

void BM_SpilloverIndices(benchmark::State& state) {
  irga::io::SimulationSpec spec;
  spec.countries = 5;
  spec.vars = 4;
  spec.T = 10;
  const auto sim = irga::io::simulate_panel(spec);
  const std::vector<irga::SystemDraw> draws(static_cast<std::size_t>(state.range(0)), sim.truth);
  const auto countries = sim.data.country_map();
  const auto types = sim.data.variable_codes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(irga::spillover_indices(draws, 12, countries, types, 5).total.data());
  }
}
BENCHMARK(BM_SpilloverIndices)->Arg(500)->Unit(benchmark::kMillisecond);

} // namespace
