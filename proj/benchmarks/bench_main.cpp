#include <benchmark/benchmark.h>

#include <random>

#include "sentinel/detector.hpp"
#include "sentinel/distflow.hpp"
#include "sentinel/presets.hpp"
#include "sentinel/simkit.hpp"

using namespace sentinel;

namespace {

void BM_Eigenvalues(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) a(i, j) = u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(lti::eigenvalues(a));
}
BENCHMARK(BM_Eigenvalues)->Arg(5)->Arg(20)->Arg(80);

void BM_FeederResilience(benchmark::State& state) {
  const auto spec = feeder::uniform_feeder(static_cast<std::size_t>(state.range(0)));
  const auto plant = feeder::build_feeder(spec).network;
  net::ResilienceOptions opt;
  opt.stop_on_first_failure = false;
  for (auto _ : state) benchmark::DoNotOptimize(net::verify_disconnection_resilience(plant, opt));
}
BENCHMARK(BM_FeederResilience)->Arg(5)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_ErrorNetworkResilience(benchmark::State& state) {
  const auto plant = feeder::build_feeder(feeder::default_feeder()).network;
  const auto det = detect::build_retrofit_detector(plant);
  const auto err = detect::error_network(plant, det);
  for (auto _ : state) benchmark::DoNotOptimize(net::verify_disconnection_resilience(err));
}
BENCHMARK(BM_ErrorNetworkResilience)->Unit(benchmark::kMillisecond);

void BM_SimulatePreset(benchmark::State& state) {
  const auto runs = presets::make("fig6");
  for (auto _ : state) {
    for (const auto& r : runs) benchmark::DoNotOptimize(sim::simulate(r.scenario));
  }
}
BENCHMARK(BM_SimulatePreset)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
