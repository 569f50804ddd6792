#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "authcoin/bytes.hpp"
#include "authcoin/crypto.hpp"

namespace authcoin {

enum class IdentifierKind : std::uint8_t { email = 0, domain = 1 };

struct EntityDescriptor {
  std::string display_name;
  std::string identifier;
  IdentifierKind identifier_kind = IdentifierKind::email;

  bool operator==(const EntityDescriptor&) const = default;
};

enum class VaKind : std::uint8_t { validation = 0, authentication = 1 };
enum class Visibility : std::uint8_t { open = 0, opaque = 1 };
enum class Outcome : std::uint8_t { success = 0, failure = 1 };
enum class FailureReason : std::uint8_t { no_response = 0, bad_signature = 1, unsatisfactory = 2, timeout = 3 };
enum class RevocationKind : std::uint8_t { key = 0, signature = 1 };
enum class VarKind : std::uint8_t { validation = 0, authentication = 1, both = 2 };
enum class VarStatus : std::uint8_t { open = 0, fulfilled = 1, failed = 2, expired = 3 };

std::string_view to_string(VaKind v);
std::string_view to_string(Visibility v);
std::string_view to_string(Outcome v);
std::string_view to_string(FailureReason v);
std::string_view to_string(RevocationKind v);
std::string_view to_string(VarKind v);
std::string_view to_string(VarStatus v);

struct PublicKeyRecord {
  Digest key_id;
  EntityDescriptor owner;
  Bytes public_bytes;
  std::uint32_t key_length_bits = 0;
  SchemeId scheme = SchemeId::toy_deterministic;
  Day created_at = 0;
  Day expires_at = 0;

  KeyMaterial key() const { return {scheme, key_length_bits, public_bytes, {}}; }
  bool operator==(const PublicKeyRecord&) const = default;
};

/// One direction of a V&A exchange. Both parties post a copy; copies share
/// `challenge_id` and differ in `posted_by`.
struct ChallengeRecord {
  Digest challenge_id;
  Digest session_id;
  std::optional<Digest> var_ref;
  VaKind kind = VaKind::validation;
  Visibility visibility = Visibility::open;
  Digest challenger_key_id;
  Digest target_key_id;
  /// Ciphertext under the target's key; opaque challenges are additionally
  /// sealed under the session secret.
  Bytes payload;
  /// hash(nonce | expected answer): lets anyone check a revealed response.
  Digest commitment;
  Day created_at = 0;
  Day respond_by = 0;
  Digest posted_by;

  bool operator==(const ChallengeRecord&) const = default;
};

struct ResponseRecord {
  Digest response_id;
  Digest challenge_id;
  Digest responder_key_id;
  Bytes payload;
  /// Signature over challenge_id | payload.
  Bytes responder_signature;
  Day created_at = 0;
  Digest posted_by;

  bool operator==(const ResponseRecord&) const = default;
};

struct VaResultRecord {
  Digest result_id;
  Digest session_id;
  Digest challenge_id;
  Digest verifier_key_id;
  Digest target_key_id;
  Outcome outcome = Outcome::success;
  std::optional<FailureReason> failure_reason;
  Day created_at = 0;

  bool operator==(const VaResultRecord&) const = default;
};

struct SignatureRecord {
  Digest signature_id;
  Digest signer_key_id;
  Digest signee_key_id;
  VaKind kind = VaKind::validation;
  Digest result_ref;
  Day created_at = 0;
  Day expires_at = 0;
  Bytes signer_signature;

  bool operator==(const SignatureRecord&) const = default;
};

struct RevocationRecord {
  Digest revocation_id;
  RevocationKind kind = RevocationKind::key;
  Digest target_id;
  Digest issuer_key_id;
  Bytes issuer_signature;
  Day created_at = 0;

  bool operator==(const RevocationRecord&) const = default;
};

struct VaRecord {
  Digest var_id;
  Digest target_key_id;
  VarKind kind = VarKind::validation;
  Height created_at_block = 0;
  VarStatus status = VarStatus::open;

  bool operator==(const VaRecord&) const = default;
};

using Record = std::variant<PublicKeyRecord, ChallengeRecord, ResponseRecord, VaResultRecord,
                            SignatureRecord, RevocationRecord, VaRecord>;

enum class RecordTag : std::uint8_t {
  public_key = 1,
  challenge = 2,
  response = 3,
  va_result = 4,
  signature = 5,
  revocation = 6,
  var = 7,
};

RecordTag tag_of(const Record& record);
std::string_view to_string(RecordTag tag);

/// Tag byte followed by the body, fields in declared order. Strings and byte
/// fields are 4-byte big-endian length-prefixed; integers big-endian
/// fixed-width; optionals a presence byte then the value.
/// Throws InvariantViolation for records that fail field-level checks.
Bytes canonical_serialize(const Record& record);
Record deserialize(ByteView bytes);

/// hash(tag | body without the record's own id field).
Digest record_id(const Record& record);

/// The value each record's own id field must hold.
Digest compute_key_id(const PublicKeyRecord& r);
Digest compute_challenge_id(const ChallengeRecord& r);  // excludes posted_by
Digest compute_response_id(const ResponseRecord& r);    // excludes posted_by
Digest compute_result_id(const VaResultRecord& r);
Digest compute_signature_id(const SignatureRecord& r);
Digest compute_revocation_id(const RevocationRecord& r);
Digest compute_var_id(const VaRecord& r);

/// Bytes covered by a signature record's signer_signature / a revocation's
/// issuer_signature / a response's responder_signature.
Bytes signature_message(const SignatureRecord& r);
Bytes revocation_message(const RevocationRecord& r);
Bytes response_message(const Digest& challenge_id, ByteView payload);

/// Fill in the id field from the current contents.
PublicKeyRecord finalize(PublicKeyRecord r);
ChallengeRecord finalize(ChallengeRecord r);
ResponseRecord finalize(ResponseRecord r);
VaResultRecord finalize(VaResultRecord r);
SignatureRecord finalize(SignatureRecord r);
RevocationRecord finalize(RevocationRecord r);
VaRecord finalize(VaRecord r);

/// Full type-invariant check, including id consistency. Throws
/// InvariantViolation naming the first violated rule.
void check_invariants(const Record& record);
bool satisfies_invariants(const Record& record);

/// Key id of every party a record mentions (challenger, target, signer, ...).
std::vector<Digest> referenced_keys(const Record& record);

PublicKeyRecord make_key_record(const EntityDescriptor& owner, const KeyMaterial& key,
                                Day created_at, Day lifetime_days = kMaxLifetimeDays);

}  // namespace authcoin
