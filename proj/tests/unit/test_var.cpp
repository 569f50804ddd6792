#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "authcoin/sim.hpp"
#include "authcoin/var.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace authcoin;
using namespace authcoin::var;
using namespace test_support;

namespace {

// n keys in block 1 (day 1) and a filler block 2, so VARs from block 2 have
// verifiers registered strictly earlier.
struct Population {
  std::vector<Keyholder> keys;
  Chain chain{kTestDifficulty, 0};

  explicit Population(std::size_t n, std::uint64_t seed = 0) {
    std::vector<Record> regs;
    for (std::size_t i = 0; i < n; ++i) {
      keys.push_back(make_party(seed * 1000 + i, "k" + std::to_string(i), 1));
      regs.emplace_back(keys.back().record);
    }
    chain.mine(regs, 1);
    chain.mine({make_party(seed * 1000 + 999, "filler", 2).record}, 2);
  }
};

SelectionParams params_of(unsigned bits, std::uint32_t pattern, double rate) {
  SelectionParams p;
  p.prefix_bits = bits;
  p.prefix_pattern = pattern;
  p.var_rate = rate;
  return p;
}

}  // namespace

TEST_CASE("selection parameter checks") {
  CHECK_NOTHROW(params_of(1, 1, 1.0).check());
  CHECK_NOTHROW(params_of(16, 0xffff, 0.01).check());
  CHECK(code_of([] { params_of(0, 0, 0.5).check(); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { params_of(17, 0, 0.5).check(); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { params_of(2, 4, 0.5).check(); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { params_of(1, 0, 0.0).check(); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { params_of(1, 0, 1.5).check(); }) == ErrorCode::invalid_config);
}

TEST_CASE("VAR counts follow ceil(rate * K)") {
  Population pop(100);
  std::size_t k = valid_keys_at(pop.chain, 2).size();
  CHECK(k == 101);
  for (double rate : {0.05, 0.005, 0.1, 0.5, 1.0}) {
    auto vars = generate_vars(pop.chain, 2, params_of(1, 0, rate));
    CHECK(vars.size() == static_cast<std::size_t>(std::ceil(rate * static_cast<double>(k))));
    std::set<Digest> targets;
    for (const auto& v : vars) {
      targets.insert(v.target_key_id);
      CHECK(v.created_at_block == 2);
      CHECK(v.status == VarStatus::open);
      CHECK(satisfies_invariants(v));
    }
    CHECK(targets.size() == vars.size());
  }
  Chain empty(kTestDifficulty, 0);
  CHECK(generate_vars(empty, 0, {}).empty());
}

TEST_CASE("generation is a function of the block") {
  Population pop(50);
  auto a = generate_vars(pop.chain, 2, params_of(1, 0, 0.2));
  auto b = generate_vars(pop.chain, 2, params_of(1, 0, 0.2));
  CHECK(a == b);
  Population again(50);
  CHECK(generate_vars(again.chain, 2, params_of(1, 0, 0.2)) == a);
  CHECK(generate_vars(pop.chain, 1, params_of(1, 0, 0.2)) != a);
}

TEST_CASE("targets are drawn uniformly") {
  // Across independent chains, each registration slot is picked with
  // probability m / K.
  const std::size_t trials = 300;
  std::vector<std::size_t> hits(21, 0);
  for (std::size_t t = 0; t < trials; ++t) {
    Population pop(20, t + 1);
    auto keys = valid_keys_at(pop.chain, 2);
    REQUIRE(keys.size() == 21);
    for (const auto& v : generate_vars(pop.chain, 2, params_of(1, 0, 0.1))) {
      auto slot = std::find(keys.begin(), keys.end(), v.target_key_id) - keys.begin();
      ++hits[static_cast<std::size_t>(slot)];
    }
  }
  Band band = binomial_band(trials, 3.0 / 21.0, 4);
  for (std::size_t h : hits) CHECK(band.contains(static_cast<double>(h) / trials));
}

TEST_CASE("valid keys exclude expired and revoked registrations") {
  Keyholder a = make_party(1, "a", 0, 2048, 10);
  Keyholder b = make_party(2, "b");
  Keyholder c = make_party(3, "c");
  Chain chain = chain_with({&a, &b, &c}, 0);
  chain.mine({keylife::revoke_key(chain, c.id(), c.key, 5)}, 5);
  CHECK(valid_keys_at(chain, 1).size() == 3);
  CHECK(valid_keys_at(chain, 2) == std::vector<Digest>{a.id(), b.id()});
  chain.mine({make_party(4, "d", 20).record}, 20);
  CHECK(valid_keys_at(chain, 3) == std::vector<Digest>{b.id(), make_party(4, "d", 20).id()});
}

TEST_CASE("prefix eligibility hits 2^-n of keys") {
  VaRecord v;
  v.target_key_id = Digest::from_hex(std::string(64, 'a'));
  v.created_at_block = 7;
  v = finalize(v);
  const std::size_t n = 3000;
  std::vector<PublicKeyRecord> keys;
  for (std::size_t i = 0; i < n; ++i) keys.push_back(make_party(i + 1, "v" + std::to_string(i)).record);
  for (unsigned bits : {1u, 2u, 3u}) {
    std::size_t hit = 0;
    for (const auto& k : keys) hit += prefix_matches(v, k, params_of(bits, 0, 0.05));
    double p = std::ldexp(1.0, -static_cast<int>(bits));
    CHECK(binomial_band(n, p, 3).contains(static_cast<double>(hit) / n));
  }

  // The patterns of one width partition the keys.
  for (const auto& k : keys) {
    int matches = 0;
    for (std::uint32_t pat = 0; pat < 4; ++pat) matches += prefix_matches(v, k, params_of(2, pat, 0.05));
    CHECK(matches == 1);
  }
}

TEST_CASE("keys registered at or after the VAR block are never eligible") {
  std::mt19937_64 rng(4);
  Population pop(30);
  for (int b = 0; b < 8; ++b)
    pop.chain.mine({make_party(700 + static_cast<std::uint64_t>(b), "late" + std::to_string(b), 3).record}, 3);
  const auto& all = pop.chain.index().all_keys;
  auto loose = params_of(1, 0, 0.05);

  for (int i = 0; i < 1000; ++i) {
    const auto& target = pop.chain.at_as<PublicKeyRecord>(all[rng() % all.size()]);
    RecordLocation vloc = all[rng() % all.size()];
    const auto& verifier = pop.chain.at_as<PublicKeyRecord>(vloc);
    VaRecord v;
    v.target_key_id = target.key_id;
    v.created_at_block = rng() % (pop.chain.tip_height() + 1);
    v = finalize(v);
    if (vloc.height >= v.created_at_block) CHECK_FALSE(eligible(v, verifier, pop.chain, loose));
    if (verifier.key_id == target.key_id) CHECK_FALSE(eligible(v, verifier, pop.chain, loose));
  }
}

TEST_CASE("claiming a VAR") {
  Population pop(40);
  auto params = params_of(1, 0, 0.1);
  auto vars = generate_vars(pop.chain, 2, params);
  std::vector<Record> posted(vars.begin(), vars.end());
  pop.chain.mine(posted, 3);
  const VaRecord& v = vars.front();
  CHECK(var_status(pop.chain, v.var_id) == VarStatus::open);

  const Keyholder* target = nullptr;
  const Keyholder* verifier = nullptr;
  const Keyholder* outsider = nullptr;
  for (const auto& k : pop.keys) {
    if (k.id() == v.target_key_id) target = &k;
    else if (eligible(v, k.record, pop.chain, params)) verifier = verifier ? verifier : &k;
    else outsider = outsider ? outsider : &k;
  }
  REQUIRE(target);
  REQUIRE(verifier);
  REQUIRE(outsider);

  Rng rng(1);
  CHECK(code_of([&] { fulfil_var(pop.chain, v.var_id, outsider->id(), params, 3, rng); }) ==
        ErrorCode::not_eligible);
  CHECK(code_of([&] { fulfil_var(pop.chain, Digest{}, verifier->id(), params, 3, rng); }) == ErrorCode::var_closed);

  protocol::VaSession s = fulfil_var(pop.chain, v.var_id, verifier->id(), params, 3, rng);
  CHECK(s.var_ref == v.var_id);
  CHECK(s.kind == session_kind(v.kind));
  CHECK(s.visibility == Visibility::open);
  CHECK(s.responder_key_id == v.target_key_id);

  using namespace protocol;
  ChallengeRecord c = issue_challenge(pop.chain, s, Direction::forward, rng, 3);
  CHECK(c.var_ref == v.var_id);
  evaluate(pop.chain, s, Direction::forward, fulfil_challenge(target->key, c, FulfilOutcome::correct, 3),
           verifier->key, 3);
  ChallengeRecord back = issue_challenge(pop.chain, s, Direction::backward, rng, 3);
  evaluate(pop.chain, s, Direction::backward, fulfil_challenge(verifier->key, back, FulfilOutcome::correct, 3),
           target->key, 3);
  pop.chain.mine(both_posts(s), 3);
  CHECK(var_status(pop.chain, v.var_id) == VarStatus::fulfilled);
  CHECK(code_of([&] { fulfil_var(pop.chain, v.var_id, verifier->id(), params, 3, rng); }) == ErrorCode::var_closed);

  // A failed claim fails the VAR.
  const VaRecord& w = vars[1];
  const Keyholder* w_verifier = nullptr;
  for (const auto& k : pop.keys)
    if (k.id() != w.target_key_id && eligible(w, k.record, pop.chain, params)) w_verifier = &k;
  REQUIRE(w_verifier);
  VaSession s2 = fulfil_var(pop.chain, w.var_id, w_verifier->id(), params, 4, rng);
  ChallengeRecord c2 = issue_challenge(pop.chain, s2, Direction::forward, rng, 4);
  evaluate(pop.chain, s2, Direction::forward, std::nullopt, w_verifier->key, c2.respond_by + 1);
  pop.chain.mine(post_session_records(s2, Party::initiator), c2.respond_by + 1);
  CHECK(var_status(pop.chain, w.var_id) == VarStatus::failed);

  // Unclaimed VARs expire.
  const VaRecord& u = vars[2];
  for (Height h = pop.chain.tip_height(); h <= 2 + kVarExpiryBlocks; ++h) {
    CHECK(var_status(pop.chain, u.var_id) == VarStatus::open);
    pop.chain.mine({make_party(9000 + h, "pad" + std::to_string(h), 40).record}, 40);
  }
  CHECK(var_status(pop.chain, u.var_id) == VarStatus::expired);
  CHECK(code_of([&] { fulfil_var(pop.chain, u.var_id, verifier->id(), params, 40, rng); }) == ErrorCode::var_closed);
}

TEST_CASE("statistics and audit over a simulated chain") {
  sim::ScenarioConfig cfg;
  cfg.seed = 5;
  cfg.honest_count = 30;
  cfg.sybil_count = 4;
  cfg.sybil_collectives = 2;
  cfg.dead_fraction = 0.3;
  cfg.blocks_to_run = 40;
  cfg.difficulty = kTestDifficulty;
  cfg.selection = params_of(1, 0, 0.1);
  sim::ScenarioResult run = sim::run_scenario(cfg);

  VarStatistics stats = var_statistics(run.chain);
  VarCounts oracle = brute_var_counts(run.chain);
  CHECK(stats.generated == oracle.generated);
  CHECK(stats.open == oracle.open);
  CHECK(stats.fulfilled == oracle.fulfilled);
  CHECK(stats.failed == oracle.failed);
  CHECK(stats.expired == oracle.expired);
  CHECK(stats.per_key_frequency == oracle.results_per_key);
  CHECK(stats.generated == stats.open + stats.fulfilled + stats.failed + stats.expired);
  CHECK(stats.generated > 0);
  CHECK(stats.fulfilled > 0);

  CHECK(audit_vars(run.chain, cfg.selection).empty());

  // A VAR the generator never produced is flagged.
  VaRecord bogus = run.chain.at_as<VaRecord>(run.chain.index().all_vars.front());
  for (const auto& loc : run.chain.index().all_keys) {
    const auto& k = run.chain.at_as<PublicKeyRecord>(loc);
    VaRecord candidate = bogus;
    candidate.target_key_id = k.key_id;
    candidate = finalize(candidate);
    if (!run.chain.contains(record_id(candidate))) {
      bogus = candidate;
      break;
    }
  }
  Chain tampered = run.chain;
  tampered.mine({bogus}, tampered.tip_timestamp());
  CHECK(audit_vars(tampered, cfg.selection) == std::vector<Digest>{bogus.var_id});
}
