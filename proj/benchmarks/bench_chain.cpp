#include <benchmark/benchmark.h>

#include "authcoin/chain.hpp"
#include "authcoin/sim.hpp"

namespace {

using namespace authcoin;

std::vector<Record> registrations(std::size_t n, std::uint64_t seed) {
  std::vector<Record> out;
  for (std::size_t i = 0; i < n; ++i) {
    KeyMaterial key = crypto::generate_keypair(seed + i, 2048);
    std::string name = "k" + std::to_string(seed + i);
    out.emplace_back(make_key_record({name, name + "@example.org", IdentifierKind::email}, key, 1));
  }
  return out;
}

/// Mining one block of ten registrations at the given difficulty.
void BM_Mine(benchmark::State& state) {
  auto difficulty = static_cast<unsigned>(state.range(0));
  Chain chain(difficulty, 0);
  std::vector<Record> pending = registrations(10, 1);
  for (auto _ : state) benchmark::DoNotOptimize(mine_block(chain, pending, 1));
}
BENCHMARK(BM_Mine)->Arg(4)->Arg(8)->Arg(12);

const Chain& scenario_chain() {
  static const Chain chain = [] {
    sim::ScenarioConfig cfg;
    cfg.honest_count = 50;
    cfg.sybil_count = 6;
    cfg.sybil_collectives = 2;
    cfg.blocks_to_run = 50;
    cfg.selection.var_rate = 0.1;
    return sim::run_scenario(cfg).chain;
  }();
  return chain;
}

void BM_VerifyChain(benchmark::State& state) {
  const Chain& chain = scenario_chain();
  for (auto _ : state) benchmark::DoNotOptimize(verify_chain(chain));
}
BENCHMARK(BM_VerifyChain)->Unit(benchmark::kMillisecond);

void BM_LoadChainBytes(benchmark::State& state) {
  Bytes bytes = chain_to_bytes(scenario_chain());
  for (auto _ : state) benchmark::DoNotOptimize(chain_from_bytes(bytes));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_LoadChainBytes)->Unit(benchmark::kMillisecond);

}  // namespace
