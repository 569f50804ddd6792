#include "authcoin/keylife.hpp"

#include <algorithm>
#include <set>

#include "authcoin/error.hpp"

namespace authcoin::keylife {

std::vector<std::string_view> FormalValidationResult::failed_checks() const {
  std::vector<std::string_view> out;
  if (!well_formed) out.push_back("well_formed");
  if (!length_sufficient) out.push_back("length_sufficient");
  if (!not_expired) out.push_back("not_expired");
  if (!not_revoked) out.push_back("not_revoked");
  return out;
}

std::string_view to_string(KeyStatus status) {
  switch (status) {
    case KeyStatus::valid: return "valid";
    case KeyStatus::expired: return "expired";
    case KeyStatus::revoked: return "revoked";
    case KeyStatus::unknown: return "unknown";
  }
  return "?";
}

bool revoked_at(const Chain& chain, const Digest& target_id, Day now) {
  auto it = chain.index().revocations_of.find(target_id);
  if (it == chain.index().revocations_of.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const RecordLocation& loc) { return chain.timestamp_at(loc.height) <= now; });
}

FormalValidationResult formal_validate(const Chain& chain, const Digest& key_id, Day now,
                                       std::uint32_t min_bits) {
  FormalValidationResult result;
  result.key_id = key_id;
  const PublicKeyRecord* key = chain.key(key_id);
  if (!key) return result;

  result.well_formed = satisfies_invariants(Record(*key)) && crypto::well_formed(key->key());
  result.length_sufficient = key->key_length_bits >= min_bits;
  result.not_expired = now < key->expires_at;
  result.not_revoked = !revoked_at(chain, key_id, now);
  result.passed = result.well_formed && result.length_sufficient && result.not_expired && result.not_revoked;
  return result;
}

KeyStatus key_status(const Chain& chain, const Digest& key_id, Day now) {
  const PublicKeyRecord* key = chain.key(key_id);
  if (!key) return KeyStatus::unknown;
  if (revoked_at(chain, key_id, now)) return KeyStatus::revoked;
  if (now >= key->expires_at) return KeyStatus::expired;
  return KeyStatus::valid;
}

const PublicKeyRecord* find_registration(const Chain& chain, const KeyMaterial& key) {
  const auto& all = chain.index().all_keys;
  for (auto it = all.rbegin(); it != all.rend(); ++it) {
    const auto& rec = chain.at_as<PublicKeyRecord>(*it);
    if (rec.scheme == key.scheme && rec.public_bytes == key.public_bytes) return &rec;
  }
  return nullptr;
}

namespace {

bool same_key(const PublicKeyRecord& rec, const KeyMaterial& key) {
  return rec.scheme == key.scheme && rec.public_bytes == key.public_bytes;
}

RevocationRecord signed_revocation(RevocationKind kind, const Digest& target, const Digest& issuer_id,
                                   const KeyMaterial& issuer, Day now) {
  RevocationRecord r;
  r.kind = kind;
  r.target_id = target;
  r.issuer_key_id = issuer_id;
  r.created_at = now;
  r.issuer_signature = crypto::sign(issuer, revocation_message(r));
  return finalize(std::move(r));
}

}  // namespace

RevocationRecord revoke_key(const Chain& chain, const Digest& key_id, const KeyMaterial& issuer, Day now) {
  const PublicKeyRecord* key = chain.key(key_id);
  if (!key) throw Error(ErrorCode::unknown_key, "no key " + key_id.short_hex() + " on chain").with_subject(key_id);
  if (!same_key(*key, issuer) || !issuer.has_private())
    throw Error(ErrorCode::not_authorized, "only the key itself may revoke it").with_subject(key_id);
  return signed_revocation(RevocationKind::key, key_id, key_id, issuer, now);
}

RevocationRecord revoke_signature(const Chain& chain, const Digest& signature_id, const KeyMaterial& issuer,
                                  Day now) {
  const SignatureRecord* sig = chain.signature(signature_id);
  if (!sig)
    throw Error(ErrorCode::unknown_signature, "no signature " + signature_id.short_hex())
        .with_subject(signature_id);
  const PublicKeyRecord* signer = chain.key(sig->signer_key_id);
  if (!signer || !same_key(*signer, issuer) || !issuer.has_private())
    throw Error(ErrorCode::not_authorized, "only the original signer may revoke a signature")
        .with_subject(signature_id);
  return signed_revocation(RevocationKind::signature, signature_id, sig->signer_key_id, issuer, now);
}

bool signature_active(const Chain& chain, const SignatureRecord& signature, Day now) {
  return now < signature.expires_at && !revoked_at(chain, signature.signature_id, now);
}

std::vector<const SignatureRecord*> active_signatures(const Chain& chain, Day now) {
  std::vector<const SignatureRecord*> out;
  for (const auto& loc : chain.index().all_signatures) {
    const auto& sig = chain.at_as<SignatureRecord>(loc);
    if (signature_active(chain, sig, now)) out.push_back(&sig);
  }
  return out;
}

std::vector<LookupHit> lookup_key(const Chain& chain, const LookupQuery& query, Day now) {
  if (query.empty()) throw Error(ErrorCode::invalid_config, "lookup needs an email, name or key id");
  Day from = now >= kLookupWindowDays ? now - kLookupWindowDays : 0;

  std::vector<LookupHit> out;
  auto consider = [&](RecordLocation loc) {
    Day stamped = chain.timestamp_at(loc.height);
    if (stamped < from || stamped > now) return;
    const auto& rec = chain.at_as<PublicKeyRecord>(loc);
    if (query.email && !(rec.owner.identifier_kind == IdentifierKind::email && rec.owner.identifier == *query.email))
      return;
    if (query.name && rec.owner.display_name != *query.name) return;
    if (query.key_id && rec.key_id != *query.key_id) return;
    out.push_back({&rec, key_status(chain, rec.key_id, now), loc});
  };

  if (query.key_id) {
    if (auto loc = chain.key_location(*query.key_id)) consider(*loc);
  } else {
    for (const auto& loc : chain.index().all_keys) consider(loc);
  }
  return out;
}

std::vector<RecordRef> history(const Chain& chain, const Digest& key_id) {
  const ChainIndex& idx = chain.index();
  std::set<RecordLocation> picked;

  auto add_responses_to = [&](const Digest& challenge_id) {
    if (auto it = idx.responses.find(challenge_id); it != idx.responses.end())
      picked.insert(it->second.begin(), it->second.end());
  };

  if (auto it = idx.involving.find(key_id); it != idx.involving.end()) {
    for (const RecordLocation& loc : it->second) {
      const Record& rec = chain.at(loc);
      if (std::holds_alternative<PublicKeyRecord>(rec) || std::holds_alternative<VaRecord>(rec)) continue;
      picked.insert(loc);
      if (const auto* c = std::get_if<ChallengeRecord>(&rec)) add_responses_to(c->challenge_id);
      if (const auto* s = std::get_if<SignatureRecord>(&rec)) {
        if (auto rv = idx.revocations_of.find(s->signature_id); rv != idx.revocations_of.end())
          picked.insert(rv->second.begin(), rv->second.end());
      }
    }
  }

  std::vector<RecordRef> out;
  std::set<Digest> seen_logical;
  for (const RecordLocation& loc : picked) {
    const Record& rec = chain.at(loc);
    if (const auto* c = std::get_if<ChallengeRecord>(&rec)) {
      if (!seen_logical.insert(c->challenge_id).second) continue;
    } else if (const auto* r = std::get_if<ResponseRecord>(&rec)) {
      if (!seen_logical.insert(r->response_id).second) continue;
    } else if (const auto* s = std::get_if<SignatureRecord>(&rec)) {
      if (idx.revocations_of.contains(s->signature_id)) continue;
    }
    out.push_back({&rec, loc});
  }
  return out;
}

}  // namespace authcoin::keylife
