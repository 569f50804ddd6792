#include <benchmark/benchmark.h>

#include "authcoin/var.hpp"

namespace {

using namespace authcoin;

struct Population {
  Chain chain{4, 0};
  std::vector<PublicKeyRecord> keys;

  explicit Population(std::size_t n) {
    std::vector<Record> regs;
    for (std::size_t i = 0; i < n; ++i) {
      KeyMaterial key = crypto::generate_keypair(i + 1, 2048);
      std::string name = "k" + std::to_string(i);
      keys.push_back(make_key_record({name, name + "@example.org", IdentifierKind::email}, key, 1));
      regs.emplace_back(keys.back());
    }
    chain.mine(regs, 1);
    chain.mine({make_key_record({"f", "f@example.org", IdentifierKind::email}, crypto::generate_keypair(0, 2048),
                                2)},
               2);
  }
};

const Population& population() {
  static const Population pop(1000);
  return pop;
}

void BM_GenerateVars(benchmark::State& state) {
  var::SelectionParams params;
  params.var_rate = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(var::generate_vars(population().chain, 2, params));
}
BENCHMARK(BM_GenerateVars);

/// Eligibility of every registered key for one VAR.
void BM_EligibilityScan(benchmark::State& state) {
  const Population& pop = population();
  var::SelectionParams params;
  params.prefix_bits = static_cast<unsigned>(state.range(0));
  VaRecord v = var::generate_vars(pop.chain, 2, params).front();
  for (auto _ : state) {
    std::size_t n = 0;
    for (const auto& k : pop.keys) n += var::eligible(v, k, pop.chain, params);
    benchmark::DoNotOptimize(n);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * pop.keys.size()));
}
BENCHMARK(BM_EligibilityScan)->Arg(1)->Arg(3);

}  // namespace
