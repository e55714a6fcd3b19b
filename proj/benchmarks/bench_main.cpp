#include <benchmark/benchmark.h>

#include <cmath>

#include "nlslab/evolution.hpp"
#include "nlslab/ground_state.hpp"
#include "nlslab/noise.hpp"

using namespace nlslab;

namespace {

ComplexField bench_data(const GridSpec& g) {
  const RadialProfile q = RadialProfile::for_dimension(g.dim, critical_exponent(g.dim));
  return sample_field(g, [&](const Vec2& x) { return q(std::hypot(x[0], x[1])); });
}

void BM_StrangStep(benchmark::State& state) {
  const auto g = make_grid(1, 40.0, static_cast<std::size_t>(state.range(0)));
  ComplexField v = bench_data(g);
  for (auto _ : state) {
    v = step_strang(v, 1e-4, 5.0);
    benchmark::DoNotOptimize(v.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.size()));
}
BENCHMARK(BM_StrangStep)->Arg(1024)->Arg(4096)->Arg(8192);

void BM_StrangStep2D(benchmark::State& state) {
  const auto g = make_grid(2, 40.0, static_cast<std::size_t>(state.range(0)));
  ComplexField v = bench_data(g);
  for (auto _ : state) {
    v = step_strang(v, 1e-4, 3.0);
    benchmark::DoNotOptimize(v.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.size()));
}
BENCHMARK(BM_StrangStep2D)->Arg(128)->Arg(256);

void BM_GnlsStep(benchmark::State& state) {
  const auto g = make_grid(1, 40.0, static_cast<std::size_t>(state.range(0)));
  ComplexField v = bench_data(g);
  const auto profiles = make_profiles(ProfileKind::schwartz, 0.1, {}, g, 1, 2.0);
  const double h[] = {0.3};
  const auto coeffs = lower_order_coefficients(profiles, h);
  for (auto _ : state) {
    v = step_gnls(v, 1e-4, 5.0, coeffs);
    benchmark::DoNotOptimize(v.values.data());
  }
}
BENCHMARK(BM_GnlsStep)->Arg(1024)->Arg(4096);

void BM_GroundState1D(benchmark::State& state) {
  const auto g = make_grid(1, 40.0, 1024);
  for (auto _ : state) benchmark::DoNotOptimize(solve_ground_state(g, 5.0, 1e-10).mass);
}
BENCHMARK(BM_GroundState1D)->Unit(benchmark::kMillisecond);

void BM_BrownianRefine(benchmark::State& state) {
  std::vector<double> grid(1001);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 1e-3 * static_cast<double>(i);
  const auto path = BrownianPath::sample(7, grid, 2);
  for (auto _ : state) benchmark::DoNotOptimize(path.refined(static_cast<int>(state.range(0))).times().size());
}
BENCHMARK(BM_BrownianRefine)->Arg(1)->Arg(4);

}  // namespace
BENCHMARK_MAIN();
