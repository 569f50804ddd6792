#include <doctest.h>

#include "authcoin/sim.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace authcoin;
using namespace authcoin::sim;
using namespace test_support;

namespace {

ScenarioConfig small_config(std::uint64_t seed = 3) {
  ScenarioConfig c;
  c.seed = seed;
  c.honest_count = 30;
  c.sybil_count = 6;
  c.sybil_collectives = 2;
  c.unreliable_count = 3;
  c.dead_fraction = 0.2;
  c.blocks_to_run = 40;
  c.difficulty = kTestDifficulty;
  c.selection.var_rate = 0.1;
  return c;
}

// One forward-only attempt by `verifier` on `target`, posted by the verifier.
std::vector<Record> attempt(const Chain& chain, const Keyholder& verifier, const Keyholder& target, Day now,
                            bool answered, Rng& rng) {
  using namespace protocol;
  VaSession s = start_session(chain, verifier.id(), target.id(), spec_of(VaKind::validation), now, rng);
  ChallengeRecord c = issue_challenge(chain, s, Direction::forward, rng, now);
  if (answered) {
    evaluate(chain, s, Direction::forward, fulfil_challenge(target.key, c, FulfilOutcome::correct, now),
             verifier.key, now);
  } else {
    evaluate(chain, s, Direction::forward, std::nullopt, verifier.key, c.respond_by + 1);
  }
  return post_session_records(s, Party::initiator);
}

CertObservation obs(const std::string& vantage, const std::string& id, std::uint8_t key, Day day = 1) {
  Digest d;
  d.bytes.fill(key);
  return {vantage, id, d, day};
}

}  // namespace

TEST_CASE("scenario runs are reproducible from the seed") {
  ScenarioConfig cfg = small_config();
  ScenarioResult a = run_scenario(cfg);
  ScenarioResult b = run_scenario(cfg);
  CHECK(chain_to_bytes(a.chain) == chain_to_bytes(b.chain));
  CHECK(a.metrics == b.metrics);
  CHECK(format_metrics(a.metrics) == format_metrics(b.metrics));

  cfg.seed = 4;
  CHECK(run_scenario(cfg).metrics.tip_hash != a.metrics.tip_hash);
}

TEST_CASE("scenario chains are valid and honour the signature rule") {
  ScenarioResult run = run_scenario(small_config());
  CHECK(verify_chain(run.chain).valid);
  CHECK(run.metrics.blocks == run.chain.tip_height());
  CHECK(run.chain.index().all_signatures.size() > 0);
  for (const auto& loc : run.chain.index().all_signatures) {
    const auto& sig = run.chain.at_as<SignatureRecord>(loc);
    const VaResultRecord* res = run.chain.result(sig.result_ref);
    REQUIRE(res);
    CHECK(res->outcome == Outcome::success);
    CHECK(run.chain.challenge(res->challenge_id)->visibility == Visibility::open);
  }
  CHECK(run.metrics.mismatches_detected == 0);
}

TEST_CASE("without sybils nobody is exposed") {
  ScenarioConfig cfg = small_config();
  cfg.sybil_count = 0;
  cfg.unreliable_count = 0;
  Metrics m = run_scenario(cfg).metrics;
  CHECK(m.sybil_keys == 0);
  CHECK(m.sybils_exposed == 0);
  CHECK(m.sybils_exposed_fraction == 0.0);
  CHECK(m.honest_falsely_flagged == 0);
  CHECK(m.questioned_keys == 0);
}

TEST_CASE("world bookkeeping") {
  World w(small_config());
  CHECK(w.actors().size() == 39);
  std::size_t dead = 0;
  for (const auto& a : w.actors()) dead += a.account_state == AccountState::dead;
  CHECK(dead == 6);
  CHECK(w.actors()[30].role == Role::sybil);
  CHECK(w.actors()[36].role == Role::unreliable_verifier);
  CHECK(w.actors()[30].collective_id != w.actors()[31].collective_id);

  w.step();
  CHECK(w.today() == 1);
  CHECK(w.chain().index().all_keys.size() == 39);
  w.run(5);
  CHECK(w.chain().tip_height() >= 5);
  CHECK(w.chain().index().all_vars.size() > 0);
  CHECK(w.metrics().dead_accounts == 6);
}

TEST_CASE("exposure grows with the VAR rate") {
  double low = 0, high = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ScenarioConfig cfg = small_config(seed);
    cfg.selection.var_rate = 0.01;
    low += run_scenario(cfg).metrics.sybils_exposed_fraction;
    cfg.selection.var_rate = 0.2;
    high += run_scenario(cfg).metrics.sybils_exposed_fraction;
  }
  CHECK(high > low);
}

TEST_CASE("suspicion closure matches a signature scan") {
  ScenarioConfig cfg = small_config();
  cfg.selection.var_rate = 0.2;
  ScenarioResult run = run_scenario(cfg);
  Day now = run.chain.tip_timestamp();
  auto exposed = exposed_keys(run.chain);
  REQUIRE_FALSE(exposed.empty());
  for (const Digest& k : exposed) CHECK(suspicion_closure(run.chain, k, now) == brute_closure(run.chain, k, now));
  for (const auto& loc : run.chain.index().all_keys) {
    const Digest& k = run.chain.at_as<PublicKeyRecord>(loc).key_id;
    CHECK(suspicion_closure(run.chain, k, now) == brute_closure(run.chain, k, now));
  }
  CHECK(code_of([&] { suspicion_closure(run.chain, Digest{}, now); }) == ErrorCode::unknown_key);
}

TEST_CASE("reachability from recorded attempts") {
  Keyholder v = make_party(1, "verifier");
  Keyholder gone = make_party(2, "gone");
  Keyholder here = make_party(3, "here");
  Keyholder once = make_party(4, "once");
  Keyholder quiet = make_party(5, "quiet");
  Chain chain = chain_with({&v, &gone, &here, &once, &quiet}, 1);
  Rng rng(1);
  for (Day d : {2u, 40u}) {
    auto recs = attempt(chain, v, gone, d, false, rng);
    auto more = attempt(chain, v, here, d, d == 40, rng);
    recs.insert(recs.end(), more.begin(), more.end());
    if (d == 2) {
      auto one = attempt(chain, v, once, d, false, rng);
      recs.insert(recs.end(), one.begin(), one.end());
    }
    chain.mine(recs, d + 20);
  }
  auto report = reachability_report(chain, 60);
  CHECK(report.at("gone@example.org") == Reachability::dead);
  CHECK(report.at("here@example.org") == Reachability::alive);
  CHECK(report.at("once@example.org") == Reachability::unknown);
  CHECK(report.at("quiet@example.org") == Reachability::unknown);
  CHECK(report.at("verifier@example.org") == Reachability::unknown);

  // Attempts older than a year no longer count.
  CHECK(reachability_report(chain, 60 + 365).at("gone@example.org") == Reachability::unknown);
}

TEST_CASE("certificate monitor") {
  std::vector<CertObservation> clean = {obs("v1", "a.org", 1), obs("v2", "a.org", 1), obs("v3", "a.org", 1),
                                        obs("v1", "b.org", 2), obs("v2", "b.org", 2), obs("v3", "b.org", 2)};
  CHECK(monitor_certificates(clean).empty());

  auto dirty = clean;
  dirty[4] = obs("v2", "b.org", 9);
  auto flags = monitor_certificates(dirty);
  REQUIRE(flags.size() == 1);
  CHECK(flags[0].identifier == "b.org");
  CHECK(flags[0].minority_vantages == std::vector<std::string>{"v2"});
  CHECK(flags[0].majority_key_id.bytes[0] == 2);

  // Observations on different days are not compared.
  CHECK(monitor_certificates({obs("v1", "a.org", 1, 1), obs("v2", "a.org", 7, 2)}).empty());

  auto tie = monitor_certificates({obs("v1", "a.org", 5), obs("v2", "a.org", 3)});
  REQUIRE(tie.size() == 1);
  CHECK(tie[0].majority_key_id.bytes[0] == 3);
  CHECK(tie[0].minority_vantages == std::vector<std::string>{"v1"});
}

TEST_CASE("scenario certificate observations") {
  ScenarioConfig cfg = small_config();
  cfg.blocks_to_run = 5;
  cfg.vantage_points = {"eu", "us", "asia"};
  cfg.cert_domains = 4;
  World w(cfg);
  w.run(cfg.blocks_to_run);
  CHECK(w.cert_observations().size() == 12);
  CHECK(w.metrics().cert_mismatches == 0);

  cfg.intercepted_vantage = "us";
  World bad(cfg);
  bad.run(cfg.blocks_to_run);
  auto flags = monitor_certificates(bad.cert_observations());
  REQUIRE(flags.size() == 1);
  CHECK(flags[0].minority_vantages == std::vector<std::string>{"us"});
}

TEST_CASE("config parsing") {
  ScenarioConfig c = parse_config(R"(# scenario
seed = 9
honest_count = 12
sybil_count = 4   # two per collective
sybil_collectives = 2
unreliable_count = 1
unreliable_diligence = 0.25
dead_fraction = 0.5
blocks_to_run = 7
difficulty = 6
prefix_bits = 2
prefix_pattern = 3
var_rate = 0.2
deadline_days = 10
key_bits = 3072
min_bits = 1024
vantage_points = a, b ,c
cert_domains = 2
intercepted_vantage = b
)");
  CHECK(c.seed == 9);
  CHECK(c.honest_count == 12);
  CHECK(c.sybil_count == 4);
  CHECK(c.sybil_collectives == 2);
  CHECK(c.unreliable_count == 1);
  CHECK(c.unreliable_diligence == 0.25);
  CHECK(c.dead_fraction == 0.5);
  CHECK(c.blocks_to_run == 7);
  CHECK(c.difficulty == 6);
  CHECK(c.selection.prefix_bits == 2);
  CHECK(c.selection.prefix_pattern == 3);
  CHECK(c.selection.var_rate == 0.2);
  CHECK(c.deadline_days == 10);
  CHECK(c.key_bits == 3072);
  CHECK(c.min_bits == 1024);
  CHECK(c.vantage_points == std::vector<std::string>{"a", "b", "c"});
  CHECK(c.cert_domains == 2);
  CHECK(c.intercepted_vantage == std::optional<std::string>("b"));

  CHECK(code_of([] { parse_config("colour = blue\n"); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { parse_config("seed = many\n"); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { parse_config("seed\n"); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { parse_config("dead_fraction = 1.5\n"); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { parse_config("prefix_bits = 0\n"); }) == ErrorCode::invalid_config);
  CHECK(code_of([] { parse_config("honest_count = 0\n"); }) == ErrorCode::invalid_config);
  CHECK(parse_config("").honest_count == ScenarioConfig{}.honest_count);
}

TEST_CASE("metrics format") {
  Metrics m;
  m.sybil_keys = 20;
  m.sybils_exposed = 5;
  m.sybils_exposed_fraction = 0.25;
  m.blocks = 3;
  m.tip_hash = "00ab";
  std::string text = format_metrics(m);
  CHECK(text.rfind("sybil_keys=20\nsybils_exposed=5\nsybils_exposed_fraction=0.250000\n", 0) == 0);
  CHECK(text.find("blocks=3\ntip_hash=00ab\n") != std::string::npos);
  CHECK(text.back() == '\n');
  CHECK_FALSE(format_report(m).empty());
}
