#include <benchmark/benchmark.h>

#include "authcoin/crypto.hpp"

namespace {

using namespace authcoin;

void BM_Hash(benchmark::State& state) {
  Bytes data(static_cast<std::size_t>(state.range(0)), 0x5a);
  for (auto _ : state) benchmark::DoNotOptimize(crypto::hash(data));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Hash)->Arg(64)->Arg(4096);

void BM_ToyKeygen(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(crypto::generate_keypair(++seed, 2048));
}
BENCHMARK(BM_ToyKeygen);

void BM_ToySign(benchmark::State& state) {
  KeyMaterial key = crypto::generate_keypair(1, 2048);
  Bytes msg(128, 0x11);
  for (auto _ : state) benchmark::DoNotOptimize(crypto::sign(key, msg));
}
BENCHMARK(BM_ToySign);

void BM_ToyVerify(benchmark::State& state) {
  KeyMaterial key = crypto::generate_keypair(1, 2048);
  Bytes msg(128, 0x11);
  Bytes sig = crypto::sign(key, msg);
  KeyMaterial pub = key.public_only();
  for (auto _ : state) benchmark::DoNotOptimize(crypto::verify(pub, msg, sig));
}
BENCHMARK(BM_ToyVerify);

}  // namespace
