#include "authcoin/protocol.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "authcoin/error.hpp"

namespace authcoin::protocol {

std::string_view to_string(Locality locality) {
  switch (locality) {
    case Locality::local_with_info: return "local_with_info";
    case Locality::global_with_info: return "global_with_info";
    case Locality::global_no_info: return "global_no_info";
  }
  return "?";
}

std::string_view to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::created: return "created";
    case SessionState::forward_challenged: return "forward_challenged";
    case SessionState::forward_done: return "forward_done";
    case SessionState::backward_challenged: return "backward_challenged";
    case SessionState::complete: return "complete";
    case SessionState::failed: return "failed";
  }
  return "?";
}

namespace {

Bytes wrong_answer(ByteView payload_template) {
  Digest d = crypto::hash({as_bytes("authcoin/wrong-answer"), payload_template});
  return Bytes(d.bytes.begin(), d.bytes.end());
}

Bytes concat(ByteView a, ByteView b) {
  Bytes out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Bytes day_bytes(Day d) {
  Writer w;
  w.u32(d);
  return std::move(w).take();
}

const PublicKeyRecord& registered(const Chain& chain, const Digest& key_id) {
  const PublicKeyRecord* key = chain.key(key_id);
  if (!key) throw Error(ErrorCode::unknown_key, "no key " + key_id.short_hex()).with_subject(key_id);
  return *key;
}

bool same_key(const PublicKeyRecord& rec, const KeyMaterial& key) {
  return rec.scheme == key.scheme && rec.public_bytes == key.public_bytes;
}

void fail_session(VaSession& session) { session.state = SessionState::failed; }

}  // namespace

VaSession start_session(const Chain& chain, const Digest& initiator_key_id, const Digest& responder_key_id,
                        const ChallengeSpec& spec, Day now, Rng& rng, std::uint32_t min_bits,
                        std::optional<Digest> var_ref) {
  if (initiator_key_id == responder_key_id)
    throw Error(ErrorCode::self_verification, "a key cannot verify itself").with_subject(initiator_key_id);
  if (spec.kind == VaKind::authentication && spec.locality == Locality::global_no_info)
    throw Error(ErrorCode::unsupported_combination,
                "authentication needs a meeting or shared information about the other party");
  if (spec.deadline_days == 0) throw Error(ErrorCode::invalid_config, "deadline must be at least one day");

  for (const Digest& id : {initiator_key_id, responder_key_id}) {
    auto check = keylife::formal_validate(chain, id, now, min_bits);
    if (!check.passed) {
      std::string failed;
      for (auto name : check.failed_checks()) failed += (failed.empty() ? "" : ", ") + std::string(name);
      throw Error(ErrorCode::formal_validation_failed, "key " + id.short_hex() + " fails " + failed)
          .with_subject(id);
    }
  }

  VaSession s;
  s.initiator_key_id = initiator_key_id;
  s.responder_key_id = responder_key_id;
  s.kind = spec.kind;
  s.visibility = spec.visibility;
  s.locality = spec.locality;
  s.payload_template = spec.payload_template;
  s.deadline_days = spec.deadline_days;
  s.var_ref = var_ref;
  Bytes salt = random_bytes(rng, 16);
  s.session_id = crypto::hash({as_bytes("authcoin/session"), initiator_key_id.view(), responder_key_id.view(),
                               day_bytes(now), salt});
  if (spec.visibility == Visibility::opaque) s.opaque_secret = random_bytes(rng, 32);
  return s;
}

ChallengeRecord issue_challenge(const Chain& chain, VaSession& session, Direction direction, Rng& rng, Day now) {
  SessionState expected = direction == Direction::forward ? SessionState::created : SessionState::forward_done;
  if (session.state != expected)
    throw Error(ErrorCode::wrong_state, std::string("cannot issue the ") + std::string(to_string(direction)) +
                                            " challenge in state " + std::string(to_string(session.state)))
        .with_subject(session.session_id);

  const PublicKeyRecord& target = registered(chain, session.target_of(direction));
  DirectionRecords& dir = session.records(direction);
  dir.nonce = random_bytes(rng, kNonceSize);
  Bytes entropy = random_bytes(rng, 32);

  Bytes payload = crypto::encrypt(target.key(), concat(dir.nonce, session.payload_template), entropy);
  if (session.visibility == Visibility::opaque) payload = crypto::seal(session.secret(), payload, entropy);

  ChallengeRecord c;
  c.session_id = session.session_id;
  c.var_ref = session.var_ref;
  c.kind = session.kind;
  c.visibility = session.visibility;
  c.challenger_key_id = session.verifier_of(direction);
  c.target_key_id = session.target_of(direction);
  c.payload = std::move(payload);
  c.commitment = crypto::hash({dir.nonce, session.payload_template});
  c.created_at = now;
  c.respond_by = now + session.deadline_days;
  c.posted_by = c.challenger_key_id;
  c = finalize(std::move(c));

  dir.challenge = c;
  session.state = direction == Direction::forward ? SessionState::forward_challenged
                                                  : SessionState::backward_challenged;
  return c;
}

std::optional<ResponseRecord> fulfil_challenge(const KeyMaterial& actor_keys, const ChallengeRecord& challenge,
                                               FulfilOutcome outcome, Day now, ByteView session_secret) {
  if (outcome == FulfilOutcome::none) return std::nullopt;
  if (!actor_keys.has_private())
    throw Error(ErrorCode::decryption_failure, "no private key to open the challenge")
        .with_subject(challenge.challenge_id);

  if (challenge.visibility == Visibility::opaque && session_secret.empty())
    throw Error(ErrorCode::decryption_failure, "opaque challenge needs the session secret")
        .with_subject(challenge.challenge_id);

  Bytes inner = challenge.payload;
  if (challenge.visibility == Visibility::opaque) inner = crypto::open(session_secret, inner);
  Bytes plain = crypto::decrypt(actor_keys, inner);
  if (plain.size() < kNonceSize)
    throw Error(ErrorCode::decryption_failure, "challenge plaintext too short").with_subject(challenge.challenge_id);

  Bytes nonce(plain.begin(), plain.begin() + kNonceSize);
  Bytes answer(plain.begin() + kNonceSize, plain.end());
  if (outcome == FulfilOutcome::wrong) answer = wrong_answer(answer);

  Bytes payload = concat(nonce, answer);
  if (challenge.visibility == Visibility::opaque)
    payload = crypto::seal(session_secret, payload,
                           crypto::hash({as_bytes("authcoin/response"), challenge.challenge_id.view()}).view());

  ResponseRecord r;
  r.challenge_id = challenge.challenge_id;
  r.responder_key_id = challenge.target_key_id;
  r.payload = std::move(payload);
  r.responder_signature = crypto::sign(actor_keys, response_message(r.challenge_id, r.payload));
  r.created_at = now;
  r.posted_by = challenge.target_key_id;
  return finalize(std::move(r));
}

Evaluation evaluate(const Chain& chain, VaSession& session, Direction direction,
                    const std::optional<ResponseRecord>& response, const KeyMaterial& verifier_keys, Day now,
                    Verdict verdict) {
  SessionState expected =
      direction == Direction::forward ? SessionState::forward_challenged : SessionState::backward_challenged;
  if (session.state != expected)
    throw Error(ErrorCode::wrong_state, std::string("cannot evaluate the ") + std::string(to_string(direction)) +
                                            " challenge in state " + std::string(to_string(session.state)))
        .with_subject(session.session_id);

  DirectionRecords& dir = session.records(direction);
  const ChallengeRecord& challenge = *dir.challenge;
  const PublicKeyRecord& verifier = registered(chain, challenge.challenger_key_id);
  const PublicKeyRecord& target = registered(chain, challenge.target_key_id);
  if (!same_key(verifier, verifier_keys) || !verifier_keys.has_private())
    throw Error(ErrorCode::not_authorized, "only the challenger may evaluate the response")
        .with_subject(session.session_id);

  std::optional<FailureReason> failure;
  if (!response) {
    if (now <= challenge.respond_by)
      throw Error(ErrorCode::wrong_state, "response still due until day " + std::to_string(challenge.respond_by))
          .with_subject(challenge.challenge_id);
    failure = FailureReason::no_response;
  } else if (response->challenge_id != challenge.challenge_id) {
    throw Error(ErrorCode::wrong_state, "response answers a different challenge")
        .with_subject(response->challenge_id);
  } else if (response->created_at > challenge.respond_by) {
    failure = FailureReason::timeout;
  } else {
    bool sig_ok = false;
    try {
      sig_ok = crypto::verify(target.key(), response_message(response->challenge_id, response->payload),
                              response->responder_signature);
    } catch (const Error&) {
      sig_ok = false;
    }
    if (!sig_ok) {
      failure = FailureReason::bad_signature;
    } else {
      Bytes plain;
      bool opened = true;
      if (challenge.visibility == Visibility::opaque) {
        try {
          plain = crypto::open(session.secret(), response->payload);
        } catch (const Error&) {
          opened = false;
        }
      } else {
        plain = response->payload;
      }
      bool answer_ok = opened && plain.size() >= kNonceSize &&
                       std::equal(dir.nonce.begin(), dir.nonce.end(), plain.begin()) &&
                       std::equal(plain.begin() + kNonceSize, plain.end(), session.payload_template.begin(),
                                  session.payload_template.end());
      if (!answer_ok || (session.kind == VaKind::authentication && verdict == Verdict::reject))
        failure = FailureReason::unsatisfactory;
    }
  }

  VaResultRecord result;
  result.session_id = session.session_id;
  result.challenge_id = challenge.challenge_id;
  result.verifier_key_id = challenge.challenger_key_id;
  result.target_key_id = challenge.target_key_id;
  result.outcome = failure ? Outcome::failure : Outcome::success;
  result.failure_reason = failure;
  result.created_at = now;
  result = finalize(std::move(result));

  Evaluation ev{result, std::nullopt};
  if (response) dir.response = response;
  dir.result = result;

  if (failure) {
    fail_session(session);
    return ev;
  }

  if (session.visibility == Visibility::open) {
    SignatureRecord sig;
    sig.signer_key_id = result.verifier_key_id;
    sig.signee_key_id = result.target_key_id;
    sig.kind = session.kind;
    sig.result_ref = result.result_id;
    sig.created_at = now;
    sig.expires_at = std::min({now + kMaxLifetimeDays, verifier.expires_at, target.expires_at});
    if (sig.expires_at > now) {
      sig.signer_signature = crypto::sign(verifier_keys, signature_message(sig));
      sig = finalize(std::move(sig));
      ev.signature = sig;
      dir.signature = sig;
    }
  }
  session.state = direction == Direction::forward ? SessionState::forward_done : SessionState::complete;
  return ev;
}

std::vector<Record> post_session_records(const VaSession& session, Party party) {
  const Digest& me = party == Party::initiator ? session.initiator_key_id : session.responder_key_id;
  std::vector<Record> out;
  for (Direction d : {Direction::forward, Direction::backward}) {
    const DirectionRecords& dir = session.records(d);
    if (!dir.challenge) continue;
    ChallengeRecord c = *dir.challenge;
    c.posted_by = me;
    out.emplace_back(std::move(c));
    if (dir.response) {
      ResponseRecord r = *dir.response;
      r.posted_by = me;
      out.emplace_back(std::move(r));
    }
    if (session.verifier_of(d) == me) {
      if (dir.result) out.emplace_back(*dir.result);
      if (dir.signature) out.emplace_back(*dir.signature);
    }
  }
  return out;
}

MismatchReport detect_posting_mismatch(const Chain& chain, const Digest& session_id) {
  MismatchReport report;
  const ChainIndex& idx = chain.index();
  auto it = idx.by_session.find(session_id);
  if (it == idx.by_session.end()) return report;

  std::map<Digest, std::vector<const ChallengeRecord*>> challenges_by_id;
  std::map<std::pair<Digest, Digest>, std::set<Digest>> ids_by_direction;
  std::vector<const VaResultRecord*> results;
  for (const RecordLocation& loc : it->second) {
    const Record& rec = chain.at(loc);
    if (const auto* c = std::get_if<ChallengeRecord>(&rec)) {
      challenges_by_id[c->challenge_id].push_back(c);
      ids_by_direction[{c->challenger_key_id, c->target_key_id}].insert(c->challenge_id);
    } else if (const auto* r = std::get_if<VaResultRecord>(&rec)) {
      results.push_back(r);
    }
  }

  auto diverge = [&](const Digest& id, std::string why) {
    report.divergent_records.push_back({id, std::move(why)});
  };

  for (const auto& [direction, ids] : ids_by_direction) {
    if (ids.size() > 1)
      for (const Digest& id : ids) diverge(id, "parties posted different challenges for one direction");
  }

  for (const auto& [cid, copies] : challenges_by_id) {
    const ChallengeRecord& c = *copies.front();
    std::set<Digest> posters;
    for (const auto* copy : copies) posters.insert(copy->posted_by);
    for (const Digest& party : {c.challenger_key_id, c.target_key_id})
      if (!posters.contains(party)) report.missing_sides.push_back({RecordTag::challenge, cid, party});

    auto rit = idx.responses.find(cid);
    if (rit == idx.responses.end()) continue;
    std::set<Digest> response_posters;
    std::set<Digest> response_ids;
    for (const RecordLocation& loc : rit->second) {
      const auto& r = chain.at_as<ResponseRecord>(loc);
      response_posters.insert(r.posted_by);
      response_ids.insert(r.response_id);
    }
    for (const Digest& party : {c.challenger_key_id, c.target_key_id})
      if (!response_posters.contains(party)) report.missing_sides.push_back({RecordTag::response, cid, party});
    if (response_ids.size() > 1)
      for (const Digest& id : response_ids) diverge(id, "parties posted different responses");
  }

  // A response is evidence when both parties posted it, it was on time, and
  // for open sessions it opens the challenge's commitment. The chain has
  // already checked its signature.
  auto evidence_for = [&](const ChallengeRecord& c) -> const ResponseRecord* {
    auto rit = idx.responses.find(c.challenge_id);
    if (rit == idx.responses.end()) return nullptr;
    std::set<Digest> posters;
    const ResponseRecord* first = nullptr;
    for (const RecordLocation& loc : rit->second) {
      const auto& r = chain.at_as<ResponseRecord>(loc);
      if (first && r.response_id != first->response_id) return nullptr;
      first = first ? first : &r;
      posters.insert(r.posted_by);
    }
    if (!posters.contains(c.challenger_key_id) || !posters.contains(c.target_key_id)) return nullptr;
    if (first->created_at > c.respond_by) return nullptr;
    if (c.visibility == Visibility::open && crypto::hash(first->payload) != c.commitment) return nullptr;
    return first;
  };

  for (const VaResultRecord* res : results) {
    auto cit = challenges_by_id.find(res->challenge_id);
    if (cit == challenges_by_id.end()) continue;
    const ChallengeRecord& c = *cit->second.front();
    const ResponseRecord* evidence = evidence_for(c);
    if (res->outcome == Outcome::failure && evidence) {
      FailureReason why = *res->failure_reason;
      bool contradicted = why != FailureReason::unsatisfactory ||
                          (c.kind == VaKind::validation && c.visibility == Visibility::open);
      if (contradicted) diverge(res->result_id, "failure contradicted by the posted response");
    }
    if (res->outcome == Outcome::success && !idx.responses.contains(c.challenge_id))
      diverge(res->result_id, "success claimed without a posted response");
  }

  report.consistent = report.missing_sides.empty() && report.divergent_records.empty();
  return report;
}

}  // namespace authcoin::protocol
