#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "crowd/kernel.hpp"
#include "crowd/solver.hpp"

namespace {

crowd::GridSpec corridor(double h) {
  const crowd::Rect dom{-8.0, 8.0, -4.0, 4.0};
  return crowd::make_grid(dom, h, h, {-8.0, 8.0, -3.0, 3.0},
                          {{-8.0, -3.0, -8.0, 3.0}, {8.0, -3.0, 8.0, 3.0}});
}

crowd::Field2D noise(const crowd::GridSpec& g) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  crowd::Field2D f(g.nx, g.ny);
  for (double& v : f.values()) v = u(rng);
  return f;
}

void BM_Convolve(benchmark::State& state) {
  const crowd::GridSpec g = corridor(1.0 / static_cast<double>(state.range(0)));
  const crowd::SampledKernel k = crowd::sample_kernel(crowd::KernelSpec{}, g);
  const crowd::Field2D f = noise(g);
  for (auto _ : state) benchmark::DoNotOptimize(crowd::convolve(f, k));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g.nx * g.ny));
}
BENCHMARK(BM_Convolve)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_SplitStep(benchmark::State& state) {
  crowd::ModelSpec m;
  m.grid = corridor(1.0 / static_cast<double>(state.range(0)));
  auto k = std::make_shared<const crowd::SampledKernel>(crowd::sample_kernel(crowd::KernelSpec{}, m.grid));
  for (int p = 0; p < 2; ++p) {
    const double gx = p == 0 ? 1.0 : -1.0;
    m.populations.push_back({crowd::SpeedLaw::linear(4.0, 1.0),
                             crowd::corridor_direction(m.grid, gx, 0.0, 0.8, 0.75), k,
                             crowd::NonlocalOp::gradient_avoidance(0.5, k, static_cast<std::size_t>(1 - p))});
  }
  crowd::PopulationField s(m.grid, {crowd::indicator_datum(m.grid, 0.9, {-6.4, -3.2, -2.4, 2.4}),
                                    crowd::indicator_datum(m.grid, 0.7, {3.2, 6.4, -2.4, 2.4})});
  for (auto _ : state) benchmark::DoNotOptimize(crowd::split_step(s, m, 1e-3));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(m.grid.nx * m.grid.ny));
}
BENCHMARK(BM_SplitStep)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
