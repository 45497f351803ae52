// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include "wildfire/baseline_ga.hpp"
#include "wildfire/firegrid.hpp"
#include "wildfire/icnn.hpp"
#include "wildfire/scenario_io.hpp"

using namespace wildfire;

namespace {

ExecPolicy policy_of(const benchmark::State& st) {
  return st.range(1) ? ExecPolicy::Parallel : ExecPolicy::Serial;
}

void BM_SpreadStep(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  PairGenConfig gen;
  auto map = random_environment(n, n, 11, gen);
  for (int y = n / 4; y < 3 * n / 4; ++y)
    for (int x = n / 4; x < 3 * n / 4; x += 3) map.intensity[map.index(x, y)] = 1.0;
  const Weather w = random_weather(5);
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(step_spread(map, w, ++seed, {}, policy_of(st)));
  st.SetItemsProcessed(st.iterations() * n * n);
}
BENCHMARK(BM_SpreadStep)->ArgsProduct({{20, 40, 160, 512}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_TrainEpoch(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto pairs = generate_pairs(4, n, 8, true, 3);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.policy = policy_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(train_sq(pairs, cfg, 1));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(pairs.size()));
}
BENCHMARK(BM_TrainEpoch)->ArgsProduct({{20}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_GaPlan(benchmark::State& st) {
  Scenario sc;
  sc.bases = {{2, 2}, {17, 17}, {2, 17}};
  for (int l = 0; l < 6; ++l) sc.drones.push_back({l % 3, 40.0});
  sc.initial = make_initial_map(20, 20, 0.95, 4, {{9, 9, 2.0}, {10, 9, 1.0}, {9, 10, 1.5}, {11, 11, 1.0}});
  const auto sq = make_icnn(20, 20, 64, true, 1);
  const auto fleet = FleetState::fresh(sc.drones_count());
  GaConfig cfg;
  cfg.policy = policy_of(st);
  cfg.generations = 30;
  for (auto _ : st) benchmark::DoNotOptimize(ga_plan(sc.initial, sc, fleet, sq, 9, cfg));
}
BENCHMARK(BM_GaPlan)->ArgsProduct({{0}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
