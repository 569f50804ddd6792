#pragma once

#include <functional>
#include <string>
#include <vector>

#include <doctest.h>

#include "authcoin/chain.hpp"
#include "authcoin/error.hpp"
#include "authcoin/keylife.hpp"
#include "authcoin/protocol.hpp"

namespace test_support {

using namespace authcoin;

/// The code of the authcoin::Error `f` throws; fails the test if none.
inline ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an authcoin::Error");
  return ErrorCode::parse;
}

/// Low difficulty keeps test mining cheap.
inline constexpr unsigned kTestDifficulty = 4;

struct Keyholder {
  KeyMaterial key;
  PublicKeyRecord record;

  const Digest& id() const { return record.key_id; }
};

inline Keyholder make_party(std::uint64_t seed, const std::string& name, Day created_at = 0,
                        std::uint32_t bits = 2048, Day lifetime = kMaxLifetimeDays) {
  Keyholder p;
  p.key = crypto::generate_keypair(seed, bits);
  EntityDescriptor owner{name, name + "@example.org", IdentifierKind::email};
  p.record = make_key_record(owner, p.key.public_only(), created_at, lifetime);
  return p;
}

/// Chain whose block 1 (stamped `day`) registers every party.
inline Chain chain_with(const std::vector<const Keyholder*>& parties, Day day = 0) {
  Chain chain(kTestDifficulty, 0);
  std::vector<Record> records;
  for (const Keyholder* p : parties) records.emplace_back(p->record);
  chain.mine(std::move(records), day);
  return chain;
}

inline protocol::ChallengeSpec spec_of(VaKind kind, Visibility visibility = Visibility::open) {
  protocol::ChallengeSpec spec;
  spec.kind = kind;
  spec.visibility = visibility;
  spec.payload_template = {'p', 'h', 'o', 't', 'o'};
  return spec;
}

/// Runs both directions with correct answers and the given verdicts.
inline protocol::VaSession run_full_session(const Chain& chain, const Keyholder& a, const Keyholder& b,
                                            const protocol::ChallengeSpec& spec, Day now, Rng& rng,
                                            protocol::Verdict forward_verdict = protocol::Verdict::accept,
                                            protocol::Verdict backward_verdict = protocol::Verdict::accept) {
  using namespace protocol;
  VaSession s = start_session(chain, a.id(), b.id(), spec, now, rng);
  ChallengeRecord c = issue_challenge(chain, s, Direction::forward, rng, now);
  auto r = fulfil_challenge(b.key, c, FulfilOutcome::correct, now, s.secret());
  evaluate(chain, s, Direction::forward, r, a.key, now, forward_verdict);
  if (s.state != SessionState::forward_done) return s;
  ChallengeRecord back = issue_challenge(chain, s, Direction::backward, rng, now);
  auto rb = fulfil_challenge(a.key, back, FulfilOutcome::correct, now, s.secret());
  evaluate(chain, s, Direction::backward, rb, b.key, now, backward_verdict);
  return s;
}

inline std::vector<Record> both_posts(const protocol::VaSession& s) {
  auto out = protocol::post_session_records(s, protocol::Party::initiator);
  auto more = protocol::post_session_records(s, protocol::Party::responder);
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

}  // namespace test_support
