#include <benchmark/benchmark.h>

#include "authcoin/sim.hpp"

namespace {

using namespace authcoin;

sim::ScenarioConfig config(std::size_t honest) {
  sim::ScenarioConfig cfg;
  cfg.honest_count = honest;
  cfg.sybil_count = honest / 5;
  cfg.sybil_collectives = 2;
  cfg.dead_fraction = 0.4;
  cfg.selection.var_rate = 0.05;
  return cfg;
}

/// One World tick after a 20-block warm-up.
void BM_WorldStep(benchmark::State& state) {
  sim::World world(config(static_cast<std::size_t>(state.range(0))));
  world.run(20);
  for (auto _ : state) world.step();
}
BENCHMARK(BM_WorldStep)->Arg(100)->Arg(400);

void BM_Scenario(benchmark::State& state) {
  sim::ScenarioConfig cfg = config(100);
  cfg.blocks_to_run = 200;
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_scenario(cfg));
}
BENCHMARK(BM_Scenario)->Unit(benchmark::kMillisecond);

}  // namespace
