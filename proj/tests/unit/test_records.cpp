#include <doctest.h>

#include <random>

#include "authcoin/records.hpp"
#include "fixtures.hpp"

using namespace authcoin;
using test_support::code_of;

namespace {

Digest digest_of(std::uint8_t fill) {
  Digest d;
  d.bytes.fill(fill);
  return d;
}

Bytes random_blob(std::mt19937_64& rng, std::size_t max_len) {
  Bytes b(rng() % (max_len + 1));
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

Digest random_digest(std::mt19937_64& rng) {
  Digest d;
  for (auto& x : d.bytes) x = static_cast<std::uint8_t>(rng());
  return d;
}

std::string hex32(std::uint8_t fill) { return digest_of(fill).hex(); }

}  // namespace

TEST_CASE("VAR record encodes byte for byte") {
  VaRecord v;
  v.target_key_id = digest_of(0x11);
  v.kind = VarKind::both;
  v.created_at_block = 0x0102030405060708ULL;
  v.status = VarStatus::open;
  v = finalize(v);

  std::string body = hex32(0x11) + "02" + "0102030405060708" + "00";
  CHECK(to_hex(canonical_serialize(v)) == "07" + v.var_id.hex() + body);
  CHECK(v.var_id == crypto::hash(from_hex("07" + body)));

  // The worked example in FORMAT.md; id computed with an external SHA-256.
  v.created_at_block = 7;
  v = finalize(v);
  CHECK(v.var_id.hex() == "752a67f227753c834bd6fb3330fadba195923ddaaa9dabda01d65275e1ecc9a4");
}

TEST_CASE("public key record encodes byte for byte") {
  PublicKeyRecord k;
  k.owner = {"Al", "a@b.c", IdentifierKind::email};
  k.public_bytes = {0xde, 0xad};
  k.key_length_bits = 2048;
  k.scheme = SchemeId::toy_deterministic;
  k.created_at = 10;
  k.expires_at = 375;
  k = finalize(k);

  std::string body = std::string("00000002") + "416c" +  // display name
                     "00000005" + "6140622e63" +          // identifier
                     "00" +                               // email
                     "00000002" + "dead" +                // public bytes
                     "00000800" +                         // 2048 bits
                     "00" +                               // toy scheme
                     "0000000a" + "00000177";             // created, expires
  CHECK(to_hex(canonical_serialize(k)) == "01" + k.key_id.hex() + body);
  CHECK(k.key_id == crypto::hash(from_hex("01" + body)));
}

TEST_CASE("result record optional failure reason encoding") {
  VaResultRecord r;
  r.session_id = digest_of(1);
  r.challenge_id = digest_of(2);
  r.verifier_key_id = digest_of(3);
  r.target_key_id = digest_of(4);
  r.outcome = Outcome::failure;
  r.failure_reason = FailureReason::timeout;
  r.created_at = 1;
  r = finalize(r);
  std::string tail = to_hex(canonical_serialize(r)).substr(2 + 64 * 5);
  CHECK(tail == "01" "01" "03" "00000001");

  r.outcome = Outcome::success;
  r.failure_reason.reset();
  r = finalize(r);
  CHECK(to_hex(canonical_serialize(r)).substr(2 + 64 * 5) == "00" "00" "00000001");
}

TEST_CASE("every record type round trips through its encoding") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    std::vector<Record> records;

    PublicKeyRecord k;
    k.owner = {"n" + std::to_string(i), "u" + std::to_string(i) + "@x.org", IdentifierKind::email};
    k.public_bytes = random_blob(rng, 40);
    k.public_bytes.push_back(1);
    k.key_length_bits = static_cast<std::uint32_t>(rng() % 8192 + 1);
    k.scheme = static_cast<SchemeId>(rng() % 2);
    k.created_at = static_cast<Day>(rng() % 1000);
    k.expires_at = k.created_at + static_cast<Day>(rng() % 365 + 1);
    records.emplace_back(finalize(k));

    ChallengeRecord c;
    c.session_id = random_digest(rng);
    if (rng() % 2) c.var_ref = random_digest(rng);
    c.kind = static_cast<VaKind>(rng() % 2);
    c.visibility = static_cast<Visibility>(rng() % 2);
    c.challenger_key_id = random_digest(rng);
    c.target_key_id = random_digest(rng);
    c.payload = random_blob(rng, 100);
    c.commitment = random_digest(rng);
    c.created_at = static_cast<Day>(rng() % 1000);
    c.respond_by = c.created_at + 14;
    c.posted_by = rng() % 2 ? c.challenger_key_id : c.target_key_id;
    records.emplace_back(finalize(c));

    ResponseRecord r;
    r.challenge_id = random_digest(rng);
    r.responder_key_id = random_digest(rng);
    r.payload = random_blob(rng, 100);
    r.responder_signature = random_blob(rng, 64);
    r.responder_signature.push_back(0);
    r.created_at = static_cast<Day>(rng() % 1000);
    r.posted_by = random_digest(rng);
    records.emplace_back(finalize(r));

    VaResultRecord res;
    res.session_id = random_digest(rng);
    res.challenge_id = random_digest(rng);
    res.verifier_key_id = random_digest(rng);
    res.target_key_id = random_digest(rng);
    res.outcome = static_cast<Outcome>(rng() % 2);
    if (res.outcome == Outcome::failure) res.failure_reason = static_cast<FailureReason>(rng() % 4);
    res.created_at = static_cast<Day>(rng() % 1000);
    records.emplace_back(finalize(res));

    SignatureRecord s;
    s.signer_key_id = random_digest(rng);
    s.signee_key_id = random_digest(rng);
    s.kind = static_cast<VaKind>(rng() % 2);
    s.result_ref = random_digest(rng);
    s.created_at = static_cast<Day>(rng() % 1000);
    s.expires_at = s.created_at + static_cast<Day>(rng() % 365 + 1);
    s.signer_signature = random_blob(rng, 64);
    s.signer_signature.push_back(0);
    records.emplace_back(finalize(s));

    RevocationRecord rv;
    rv.kind = static_cast<RevocationKind>(rng() % 2);
    rv.target_id = random_digest(rng);
    rv.issuer_key_id = rv.kind == RevocationKind::key ? rv.target_id : random_digest(rng);
    rv.issuer_signature = Bytes{1, 2, 3};
    rv.created_at = static_cast<Day>(rng() % 1000);
    records.emplace_back(finalize(rv));

    VaRecord v;
    v.target_key_id = random_digest(rng);
    v.kind = static_cast<VarKind>(rng() % 3);
    v.created_at_block = rng();
    records.emplace_back(finalize(v));

    for (const Record& rec : records) {
      CHECK(satisfies_invariants(rec));
      Bytes bytes = canonical_serialize(rec);
      Record back = deserialize(bytes);
      CHECK(back == rec);
      CHECK(canonical_serialize(back) == bytes);
      CHECK(static_cast<std::uint8_t>(tag_of(rec)) == bytes[0]);
    }
  }
}

TEST_CASE("deserialize rejects malformed input") {
  VaRecord v;
  v.target_key_id = digest_of(9);
  v = finalize(v);
  Bytes good = canonical_serialize(v);

  Bytes unknown_tag = good;
  unknown_tag[0] = 8;
  CHECK(code_of([&] { deserialize(unknown_tag); }) == ErrorCode::parse);

  Bytes trailing = good;
  trailing.push_back(0);
  CHECK(code_of([&] { deserialize(trailing); }) == ErrorCode::parse);

  Bytes truncated(good.begin(), good.end() - 1);
  CHECK(code_of([&] { deserialize(truncated); }) == ErrorCode::parse);

  Bytes bad_kind = good;
  bad_kind[1 + 32 + 32] = 3;
  CHECK(code_of([&] { deserialize(bad_kind); }) == ErrorCode::parse);

  ChallengeRecord c;
  c.challenger_key_id = digest_of(1);
  c.target_key_id = digest_of(2);
  c.posted_by = c.challenger_key_id;
  c = finalize(c);
  Bytes bad_presence = canonical_serialize(c);
  bad_presence[1 + 32 + 32] = 2;
  CHECK(code_of([&] { deserialize(bad_presence); }) == ErrorCode::parse);

  CHECK(code_of([] { deserialize(Bytes{}); }) == ErrorCode::parse);
}

TEST_CASE("key record lifetime and identity invariants") {
  KeyMaterial key = crypto::generate_keypair(1, 2048);
  EntityDescriptor owner{"A", "a@b.c", IdentifierKind::email};

  CHECK(satisfies_invariants(make_key_record(owner, key, 0, 365)));
  CHECK_FALSE(satisfies_invariants(make_key_record(owner, key, 0, 366)));
  CHECK_FALSE(satisfies_invariants(make_key_record(owner, key, 5, 0)));
  CHECK_FALSE(satisfies_invariants(make_key_record({"A", "no-at-sign", IdentifierKind::email}, key, 0)));
  CHECK_FALSE(satisfies_invariants(make_key_record({"A", "a@@b", IdentifierKind::email}, key, 0)));
  CHECK(satisfies_invariants(make_key_record({"A", "example.org", IdentifierKind::domain}, key, 0)));
  CHECK_FALSE(satisfies_invariants(make_key_record({"A", "", IdentifierKind::domain}, key, 0)));

  PublicKeyRecord stale = make_key_record(owner, key, 0);
  stale.owner.display_name = "B";
  CHECK(code_of([&] { check_invariants(stale); }) == ErrorCode::invariant_violation);
  CHECK(satisfies_invariants(finalize(stale)));
}

TEST_CASE("signature and result invariants") {
  SignatureRecord s;
  s.signer_key_id = digest_of(1);
  s.signee_key_id = digest_of(2);
  s.signer_signature = {1};
  s.created_at = 10;
  s.expires_at = 375;
  CHECK(satisfies_invariants(finalize(s)));
  s.expires_at = 376;
  CHECK_FALSE(satisfies_invariants(finalize(s)));
  s.expires_at = 10;
  CHECK_FALSE(satisfies_invariants(finalize(s)));
  s.expires_at = 20;
  s.signee_key_id = s.signer_key_id;
  CHECK_FALSE(satisfies_invariants(finalize(s)));

  VaResultRecord r;
  r.verifier_key_id = digest_of(1);
  r.target_key_id = digest_of(2);
  r.outcome = Outcome::failure;
  CHECK(code_of([&] { canonical_serialize(r); }) == ErrorCode::invariant_violation);
  r.failure_reason = FailureReason::timeout;
  CHECK(satisfies_invariants(finalize(r)));
  r.outcome = Outcome::success;
  CHECK_FALSE(satisfies_invariants(finalize(r)));
}

TEST_CASE("dual-posted copies share the logical id but not the record id") {
  ChallengeRecord c;
  c.challenger_key_id = digest_of(1);
  c.target_key_id = digest_of(2);
  c.posted_by = c.challenger_key_id;
  c = finalize(c);
  ChallengeRecord copy = c;
  copy.posted_by = c.target_key_id;
  CHECK(satisfies_invariants(copy));
  CHECK(compute_challenge_id(copy) == c.challenge_id);
  CHECK(record_id(copy) != record_id(c));

  copy.posted_by = digest_of(3);
  CHECK_FALSE(satisfies_invariants(copy));
}

TEST_CASE("referenced keys") {
  SignatureRecord s;
  s.signer_key_id = digest_of(1);
  s.signee_key_id = digest_of(2);
  CHECK(referenced_keys(s) == std::vector<Digest>{digest_of(1), digest_of(2)});

  RevocationRecord rv;
  rv.kind = RevocationKind::signature;
  rv.target_id = digest_of(7);
  rv.issuer_key_id = digest_of(1);
  CHECK(referenced_keys(rv) == std::vector<Digest>{digest_of(1)});
}
