#include <benchmark/benchmark.h>

#include <numbers>

#include "warpflow/radial.hpp"
#include "warpflow/sphere_flow.hpp"

using namespace warpflow;

static void BM_FlowStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DensitySpec density{RadialDensity::none(), AngularDensity::zero()};
  auto curve = make_latitude_circle(std::numbers::pi / 3, n, 1.0);
  const double dt = admissible_step(curve);
  for (auto _ : state) {
    auto next = flow_step(curve, density, dt);
    benchmark::DoNotOptimize(next.nodes().data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FlowStep)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

static void BM_Diagnose(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DensitySpec density{RadialDensity::none(), AngularDensity::z_squared(1.0)};
  const auto curve = make_latitude_circle(std::numbers::pi / 3, n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(diagnose(curve, density));
}
BENCHMARK(BM_Diagnose)->RangeMultiplier(2)->Range(64, 1024);

static void BM_CheckEmbedded(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto curve = make_latitude_circle(std::numbers::pi / 3, n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(check_embedded(curve));
}
BENCHMARK(BM_CheckEmbedded)->RangeMultiplier(2)->Range(64, 1024);

static void BM_IntegrateRadialGaussian(benchmark::State& state) {
  const auto space = WarpedSpace::euclidean();
  const DensitySpec density{RadialDensity::gaussian(1.0), AngularDensity::zero()};
  for (auto _ : state) {
    auto traj = integrate_radial(space, density, 2.0, 50.0);
    benchmark::DoNotOptimize(traj.ttilde_end());
  }
}
BENCHMARK(BM_IntegrateRadialGaussian);

BENCHMARK_MAIN();
