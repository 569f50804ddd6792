#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "authcoin/chain.hpp"

namespace authcoin::keylife {

inline constexpr std::uint32_t kDefaultMinBits = 2048;
inline constexpr Day kLookupWindowDays = 365;

struct FormalValidationResult {
  Digest key_id;
  bool passed = false;
  bool well_formed = false;
  bool length_sufficient = false;
  bool not_expired = false;
  bool not_revoked = false;

  /// Names of the checks that failed, in fixed order.
  std::vector<std::string_view> failed_checks() const;
};

enum class KeyStatus { valid, expired, revoked, unknown };
std::string_view to_string(KeyStatus status);

/// Pre-check gating every V&A session. An unknown key fails every check.
FormalValidationResult formal_validate(const Chain& chain, const Digest& key_id, Day now,
                                       std::uint32_t min_bits = kDefaultMinBits);

/// Revoked wins over expired. Expiry is exclusive: valid strictly before
/// expires_at. Revocations count from their block's timestamp.
KeyStatus key_status(const Chain& chain, const Digest& key_id, Day now);
bool revoked_at(const Chain& chain, const Digest& target_id, Day now);

/// Latest registration whose key material equals `key`'s public half.
const PublicKeyRecord* find_registration(const Chain& chain, const KeyMaterial& key);

/// Builds a self-signed key revocation ready for the pending pool.
/// Throws UnknownKey or NotAuthorized.
RevocationRecord revoke_key(const Chain& chain, const Digest& key_id, const KeyMaterial& issuer, Day now);
/// Throws UnknownSignature or NotAuthorized (issuer is not the signer).
RevocationRecord revoke_signature(const Chain& chain, const Digest& signature_id, const KeyMaterial& issuer,
                                  Day now);

/// Unrevoked and unexpired at `now`.
bool signature_active(const Chain& chain, const SignatureRecord& signature, Day now);
std::vector<const SignatureRecord*> active_signatures(const Chain& chain, Day now);

struct LookupQuery {
  std::optional<std::string> email;
  std::optional<std::string> name;
  std::optional<Digest> key_id;

  bool empty() const { return !email && !name && !key_id; }
};

struct LookupHit {
  const PublicKeyRecord* record = nullptr;
  KeyStatus status = KeyStatus::unknown;
  RecordLocation location;
};

/// Exact matches on every field present in the query, from blocks stamped
/// within the trailing 365 days, in chain order.
std::vector<LookupHit> lookup_key(const Chain& chain, const LookupQuery& query, Day now);

/// Challenges, responses, results, signatures and revocations involving the
/// key, in chain order. Dual-posted copies appear once; revoked signatures
/// are left out.
std::vector<RecordRef> history(const Chain& chain, const Digest& key_id);

}  // namespace authcoin::keylife
