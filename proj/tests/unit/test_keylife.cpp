#include <doctest.h>

#include <random>

#include "authcoin/keylife.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace authcoin;
using namespace authcoin::keylife;
using namespace test_support;

namespace {

struct Subject {
  bool well_formed, long_enough, expired, revoked;
};

// Registers one key with the requested defects in block 1 (day 0), revokes
// it on day 1 if asked, and returns the chain together with the key id.
std::pair<Chain, Digest> build_subject(const Subject& s, std::uint64_t seed) {
  KeyMaterial key = crypto::generate_keypair(seed, s.long_enough ? 2048 : 1024);
  if (!s.well_formed) key = {SchemeId::toy_deterministic, key.key_length_bits, Bytes(5, 0xab), {}};
  Day lifetime = s.expired ? 10 : 365;
  PublicKeyRecord rec = make_key_record({"k", "k@example.org", IdentifierKind::email}, key, 0, lifetime);
  Chain chain(kTestDifficulty, 0);
  chain.mine({rec}, 0);
  if (s.revoked) chain.mine({revoke_key(chain, rec.key_id, key, 1)}, 1);
  return {std::move(chain), rec.key_id};
}

}  // namespace

TEST_CASE("formal validation truth table") {
  const Day now = 20;
  int constructed = 0;
  for (int mask = 0; mask < 16; ++mask) {
    Subject s{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0, (mask & 8) != 0};
    // A malformed key cannot sign its own revocation.
    if (!s.well_formed && s.revoked) continue;
    ++constructed;
    CAPTURE(mask);
    auto [chain, id] = build_subject(s, 100 + static_cast<std::uint64_t>(mask));
    FormalValidationResult r = formal_validate(chain, id, now);
    CHECK(r.well_formed == s.well_formed);
    CHECK(r.length_sufficient == s.long_enough);
    CHECK(r.not_expired == !s.expired);
    CHECK(r.not_revoked == !s.revoked);
    CHECK(r.passed == (s.well_formed && s.long_enough && !s.expired && !s.revoked));
    CHECK(r.failed_checks().size() ==
          static_cast<std::size_t>(!s.well_formed + !s.long_enough + s.expired + s.revoked));

    KeyStatus expected = s.revoked ? KeyStatus::revoked : s.expired ? KeyStatus::expired : KeyStatus::valid;
    CHECK(key_status(chain, id, now) == expected);
  }
  CHECK(constructed == 12);
}

TEST_CASE("unknown keys fail every check") {
  Chain chain(kTestDifficulty, 0);
  FormalValidationResult r = formal_validate(chain, make_party(1, "x").id(), 0);
  CHECK_FALSE(r.passed);
  CHECK(r.failed_checks().size() == 4);
  CHECK(key_status(chain, r.key_id, 0) == KeyStatus::unknown);
}

TEST_CASE("minimum length is configurable") {
  Keyholder weak = make_party(1, "weak", 0, 1024);
  Chain chain = chain_with({&weak});
  CHECK_FALSE(formal_validate(chain, weak.id(), 0).passed);
  CHECK(formal_validate(chain, weak.id(), 0, 1024).passed);
}

TEST_CASE("expiry is exclusive and revocation counts from its block") {
  Keyholder a = make_party(1, "alice", 0, 2048, 30);
  Chain chain = chain_with({&a}, 0);
  CHECK(key_status(chain, a.id(), 29) == KeyStatus::valid);
  CHECK(key_status(chain, a.id(), 30) == KeyStatus::expired);

  Keyholder b = make_party(2, "bob");
  chain.mine({b.record}, 0);
  chain.mine({revoke_key(chain, b.id(), b.key, 10)}, 12);
  CHECK(key_status(chain, b.id(), 11) == KeyStatus::valid);
  CHECK(key_status(chain, b.id(), 12) == KeyStatus::revoked);
}

TEST_CASE("key status never returns to valid") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    Day lifetime = static_cast<Day>(rng() % 365 + 1);
    Keyholder p = make_party(static_cast<std::uint64_t>(trial), "p" + std::to_string(trial), 0, 2048, lifetime);
    Chain chain = chain_with({&p}, 0);
    if (rng() % 2) chain.mine({revoke_key(chain, p.id(), p.key, 5)}, static_cast<Day>(5 + rng() % 300));
    bool left_valid = false;
    for (Day d = 0; d < 800; d += 7) {
      KeyStatus st = key_status(chain, p.id(), d);
      if (left_valid) CHECK(st != KeyStatus::valid);
      if (st != KeyStatus::valid) left_valid = true;
    }
    CHECK(left_valid);
  }
}

TEST_CASE("revocation authority") {
  Keyholder a = make_party(1, "alice");
  Keyholder b = make_party(2, "bob");
  Chain chain = chain_with({&a, &b}, 1);

  CHECK(code_of([&] { revoke_key(chain, make_party(3, "c").id(), a.key, 2); }) == ErrorCode::unknown_key);
  CHECK(code_of([&] { revoke_key(chain, a.id(), b.key, 2); }) == ErrorCode::not_authorized);
  CHECK(code_of([&] { revoke_key(chain, a.id(), a.key.public_only(), 2); }) == ErrorCode::not_authorized);

  Rng rng(5);
  auto s = run_full_session(chain, a, b, spec_of(VaKind::validation), 2, rng);
  chain.mine(both_posts(s), 2);
  const SignatureRecord& sig = *s.directions[0].signature;
  CHECK(sig.signer_key_id == a.id());
  CHECK(code_of([&] { revoke_signature(chain, Digest{}, a.key, 3); }) == ErrorCode::unknown_signature);
  CHECK(code_of([&] { revoke_signature(chain, sig.signature_id, b.key, 3); }) == ErrorCode::not_authorized);

  RevocationRecord rv = revoke_signature(chain, sig.signature_id, a.key, 3);
  CHECK(signature_active(chain, sig, 3));
  chain.mine({rv}, 3);
  CHECK_FALSE(signature_active(chain, sig, 3));
  CHECK(signature_active(chain, *s.directions[1].signature, 3));
  CHECK(active_signatures(chain, 3).size() == 1);

  // A forged revocation is rejected by the chain.
  RevocationRecord forged = rv;
  forged.target_id = s.directions[1].signature->signature_id;
  forged = finalize(forged);
  CHECK(code_of([&] { mine_block(chain, {forged}, 4); }) == ErrorCode::invalid_record);
}

TEST_CASE("find registration picks the latest matching record") {
  Keyholder a = make_party(1, "alice", 0);
  Chain chain = chain_with({&a}, 0);
  PublicKeyRecord renewed = make_key_record(a.record.owner, a.key.public_only(), 100);
  chain.mine({renewed}, 100);
  CHECK(find_registration(chain, a.key)->key_id == renewed.key_id);
  CHECK(find_registration(chain, make_party(2, "b").key) == nullptr);
}

TEST_CASE("lookup agrees with a scan of raw blocks") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> names = {"ann", "ben", "cat", "dan"};
  Chain chain(kTestDifficulty, 0);
  Day day = 0;
  for (int i = 0; i < 40; ++i) {
    day += static_cast<Day>(rng() % 40);
    const std::string& name = names[rng() % names.size()];
    std::string email = names[rng() % names.size()] + "@example.org";
    KeyMaterial key = crypto::generate_keypair(static_cast<std::uint64_t>(i) + 500, 2048);
    chain.mine({make_key_record({name, email, IdentifierKind::email}, key, day)}, day);
  }
  const auto& keys = chain.index().all_keys;

  for (int q = 0; q < 200; ++q) {
    LookupQuery query;
    if (rng() % 2) query.email = names[rng() % names.size()] + "@example.org";
    if (rng() % 2) query.name = names[rng() % names.size()];
    if (query.empty() || rng() % 4 == 0)
      query.key_id = chain.at_as<PublicKeyRecord>(keys[rng() % keys.size()]).key_id;
    Day now = static_cast<Day>(rng() % (day + 100));

    std::vector<Digest> got;
    for (const LookupHit& h : lookup_key(chain, query, now)) {
      got.push_back(h.record->key_id);
      CHECK(h.status == key_status(chain, h.record->key_id, now));
    }
    CHECK(got == brute_lookup(chain, query, now));
  }
  CHECK(code_of([&] { lookup_key(chain, {}, 0); }) == ErrorCode::invalid_config);
}

TEST_CASE("history lists each logical record once") {
  Keyholder a = make_party(1, "alice");
  Keyholder b = make_party(2, "bob");
  Keyholder c = make_party(3, "carol");
  Chain chain = chain_with({&a, &b, &c}, 1);
  Rng rng(8);
  auto s = run_full_session(chain, a, b, spec_of(VaKind::validation), 2, rng);
  chain.mine(both_posts(s), 2);

  auto count = [&](const std::vector<RecordRef>& h, RecordTag tag) {
    std::size_t n = 0;
    for (const auto& ref : h) n += tag_of(*ref.record) == tag;
    return n;
  };
  auto h = history(chain, a.id());
  CHECK(count(h, RecordTag::challenge) == 2);
  CHECK(count(h, RecordTag::response) == 2);
  CHECK(count(h, RecordTag::va_result) == 2);
  CHECK(count(h, RecordTag::signature) == 2);
  CHECK(count(h, RecordTag::public_key) == 0);
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i - 1].location < h[i].location);
  CHECK(history(chain, c.id()).empty());

  chain.mine({revoke_signature(chain, s.directions[0].signature->signature_id, a.key, 3)}, 3);
  h = history(chain, a.id());
  CHECK(count(h, RecordTag::signature) == 1);
  CHECK(count(h, RecordTag::revocation) == 1);
}
