#include "authcoin/records.hpp"

#include <algorithm>

#include "authcoin/error.hpp"

namespace authcoin {

std::string_view to_string(VaKind v) {
  return v == VaKind::validation ? "validation" : "authentication";
}
std::string_view to_string(Visibility v) { return v == Visibility::open ? "open" : "opaque"; }
std::string_view to_string(Outcome v) { return v == Outcome::success ? "success" : "failure"; }
std::string_view to_string(FailureReason v) {
  switch (v) {
    case FailureReason::no_response: return "no_response";
    case FailureReason::bad_signature: return "bad_signature";
    case FailureReason::unsatisfactory: return "unsatisfactory";
    case FailureReason::timeout: return "timeout";
  }
  return "?";
}
std::string_view to_string(RevocationKind v) { return v == RevocationKind::key ? "key" : "signature"; }
std::string_view to_string(VarKind v) {
  switch (v) {
    case VarKind::validation: return "validation";
    case VarKind::authentication: return "authentication";
    case VarKind::both: return "both";
  }
  return "?";
}
std::string_view to_string(VarStatus v) {
  switch (v) {
    case VarStatus::open: return "open";
    case VarStatus::fulfilled: return "fulfilled";
    case VarStatus::failed: return "failed";
    case VarStatus::expired: return "expired";
  }
  return "?";
}

std::string_view to_string(RecordTag tag) {
  switch (tag) {
    case RecordTag::public_key: return "public_key";
    case RecordTag::challenge: return "challenge";
    case RecordTag::response: return "response";
    case RecordTag::va_result: return "va_result";
    case RecordTag::signature: return "signature";
    case RecordTag::revocation: return "revocation";
    case RecordTag::var: return "var";
  }
  return "?";
}

RecordTag tag_of(const Record& record) {
  return static_cast<RecordTag>(record.index() + 1);
}

namespace {

// Which id-like fields a serialization pass includes.
enum class Fields {
  full,
  without_id,
  without_id_and_poster,
};

[[noreturn]] void violation(const std::string& what) {
  throw Error(ErrorCode::invariant_violation, what);
}

template <typename E>
E read_enum(Reader& r, std::uint8_t max) {
  std::uint8_t v = r.u8();
  if (v > max) throw Error(ErrorCode::parse, "enum value out of range");
  return static_cast<E>(v);
}

bool read_presence(Reader& r) {
  std::uint8_t v = r.u8();
  if (v > 1) throw Error(ErrorCode::parse, "presence byte must be 0 or 1");
  return v == 1;
}

void check_fields(const PublicKeyRecord& r) {
  if (r.owner.identifier.empty()) violation("owner identifier is empty");
  if (r.owner.identifier_kind == IdentifierKind::email &&
      std::count(r.owner.identifier.begin(), r.owner.identifier.end(), '@') != 1)
    violation("email identifier must contain exactly one '@'");
  if (r.public_bytes.empty()) violation("public key bytes are empty");
  if (r.key_length_bits == 0) violation("key length must be positive");
  if (r.expires_at <= r.created_at) violation("key must expire after creation");
  if (r.expires_at - r.created_at > kMaxLifetimeDays) violation("key lifetime exceeds 365 days");
}

void check_fields(const ChallengeRecord& r) {
  if (r.challenger_key_id == r.target_key_id) violation("challenger and target are the same key");
  if (r.posted_by != r.challenger_key_id && r.posted_by != r.target_key_id)
    violation("challenge posted by a non-party");
  if (r.respond_by < r.created_at) violation("response deadline precedes challenge");
}

void check_fields(const ResponseRecord& r) {
  if (r.responder_signature.empty()) violation("response is unsigned");
}

void check_fields(const VaResultRecord& r) {
  if ((r.outcome == Outcome::failure) != r.failure_reason.has_value())
    violation("failure_reason must be present iff outcome is failure");
  if (r.verifier_key_id == r.target_key_id) violation("verifier and target are the same key");
}

void check_fields(const SignatureRecord& r) {
  if (r.signer_key_id == r.signee_key_id) violation("self-signature");
  if (r.expires_at <= r.created_at) violation("signature must expire after creation");
  if (r.expires_at - r.created_at > kMaxLifetimeDays) violation("signature lifetime exceeds 365 days");
  if (r.signer_signature.empty()) violation("signature record is unsigned");
}

void check_fields(const RevocationRecord& r) {
  if (r.issuer_signature.empty()) violation("revocation is unsigned");
  if (r.kind == RevocationKind::key && r.issuer_key_id != r.target_id)
    violation("key revocation must be issued by the revoked key");
}

void check_fields(const VaRecord&) {}

void write_body(Writer& w, const PublicKeyRecord& r, Fields f) {
  if (f == Fields::full) w.digest(r.key_id);
  w.str(r.owner.display_name);
  w.str(r.owner.identifier);
  w.u8(static_cast<std::uint8_t>(r.owner.identifier_kind));
  w.blob(r.public_bytes);
  w.u32(r.key_length_bits);
  w.u8(static_cast<std::uint8_t>(r.scheme));
  w.u32(r.created_at);
  w.u32(r.expires_at);
}

void write_body(Writer& w, const ChallengeRecord& r, Fields f) {
  if (f == Fields::full) w.digest(r.challenge_id);
  w.digest(r.session_id);
  w.u8(r.var_ref ? 1 : 0);
  if (r.var_ref) w.digest(*r.var_ref);
  w.u8(static_cast<std::uint8_t>(r.kind));
  w.u8(static_cast<std::uint8_t>(r.visibility));
  w.digest(r.challenger_key_id);
  w.digest(r.target_key_id);
  w.blob(r.payload);
  w.digest(r.commitment);
  w.u32(r.created_at);
  w.u32(r.respond_by);
  if (f != Fields::without_id_and_poster) w.digest(r.posted_by);
}

void write_body(Writer& w, const ResponseRecord& r, Fields f) {
  if (f == Fields::full) w.digest(r.response_id);
  w.digest(r.challenge_id);
  w.digest(r.responder_key_id);
  w.blob(r.payload);
  w.blob(r.responder_signature);
  w.u32(r.created_at);
  if (f != Fields::without_id_and_poster) w.digest(r.posted_by);
}

void write_body(Writer& w, const VaResultRecord& r, Fields f) {
  if (f == Fields::full) w.digest(r.result_id);
  w.digest(r.session_id);
  w.digest(r.challenge_id);
  w.digest(r.verifier_key_id);
  w.digest(r.target_key_id);
  w.u8(static_cast<std::uint8_t>(r.outcome));
  w.u8(r.failure_reason ? 1 : 0);
  if (r.failure_reason) w.u8(static_cast<std::uint8_t>(*r.failure_reason));
  w.u32(r.created_at);
}

// `with_signature` is false when producing the bytes the signer signs.
void write_body(Writer& w, const SignatureRecord& r, Fields f, bool with_signature = true) {
  if (f == Fields::full) w.digest(r.signature_id);
  w.digest(r.signer_key_id);
  w.digest(r.signee_key_id);
  w.u8(static_cast<std::uint8_t>(r.kind));
  w.digest(r.result_ref);
  w.u32(r.created_at);
  w.u32(r.expires_at);
  if (with_signature) w.blob(r.signer_signature);
}

void write_body(Writer& w, const RevocationRecord& r, Fields f, bool with_signature = true) {
  if (f == Fields::full) w.digest(r.revocation_id);
  w.u8(static_cast<std::uint8_t>(r.kind));
  w.digest(r.target_id);
  w.digest(r.issuer_key_id);
  if (with_signature) w.blob(r.issuer_signature);
  w.u32(r.created_at);
}

void write_body(Writer& w, const VaRecord& r, Fields f) {
  if (f == Fields::full) w.digest(r.var_id);
  w.digest(r.target_key_id);
  w.u8(static_cast<std::uint8_t>(r.kind));
  w.u64(r.created_at_block);
  w.u8(static_cast<std::uint8_t>(r.status));
}

template <typename R>
Bytes serialize_as(const R& r, RecordTag tag, Fields f) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(tag));
  write_body(w, r, f);
  return std::move(w).take();
}

template <typename R>
RecordTag tag_for() {
  return static_cast<RecordTag>(Record(std::in_place_type<R>).index() + 1);
}

template <typename R>
Digest id_over(const R& r, Fields f) {
  return crypto::hash(serialize_as(r, tag_for<R>(), f));
}

PublicKeyRecord read_key(Reader& r) {
  PublicKeyRecord k;
  k.key_id = r.digest();
  k.owner.display_name = r.str();
  k.owner.identifier = r.str();
  k.owner.identifier_kind = read_enum<IdentifierKind>(r, 1);
  k.public_bytes = r.blob();
  k.key_length_bits = r.u32();
  k.scheme = read_enum<SchemeId>(r, 1);
  k.created_at = r.u32();
  k.expires_at = r.u32();
  return k;
}

ChallengeRecord read_challenge(Reader& r) {
  ChallengeRecord c;
  c.challenge_id = r.digest();
  c.session_id = r.digest();
  if (read_presence(r)) c.var_ref = r.digest();
  c.kind = read_enum<VaKind>(r, 1);
  c.visibility = read_enum<Visibility>(r, 1);
  c.challenger_key_id = r.digest();
  c.target_key_id = r.digest();
  c.payload = r.blob();
  c.commitment = r.digest();
  c.created_at = r.u32();
  c.respond_by = r.u32();
  c.posted_by = r.digest();
  return c;
}

ResponseRecord read_response(Reader& r) {
  ResponseRecord x;
  x.response_id = r.digest();
  x.challenge_id = r.digest();
  x.responder_key_id = r.digest();
  x.payload = r.blob();
  x.responder_signature = r.blob();
  x.created_at = r.u32();
  x.posted_by = r.digest();
  return x;
}

VaResultRecord read_result(Reader& r) {
  VaResultRecord x;
  x.result_id = r.digest();
  x.session_id = r.digest();
  x.challenge_id = r.digest();
  x.verifier_key_id = r.digest();
  x.target_key_id = r.digest();
  x.outcome = read_enum<Outcome>(r, 1);
  if (read_presence(r)) x.failure_reason = read_enum<FailureReason>(r, 3);
  x.created_at = r.u32();
  return x;
}

SignatureRecord read_signature(Reader& r) {
  SignatureRecord s;
  s.signature_id = r.digest();
  s.signer_key_id = r.digest();
  s.signee_key_id = r.digest();
  s.kind = read_enum<VaKind>(r, 1);
  s.result_ref = r.digest();
  s.created_at = r.u32();
  s.expires_at = r.u32();
  s.signer_signature = r.blob();
  return s;
}

RevocationRecord read_revocation(Reader& r) {
  RevocationRecord x;
  x.revocation_id = r.digest();
  x.kind = read_enum<RevocationKind>(r, 1);
  x.target_id = r.digest();
  x.issuer_key_id = r.digest();
  x.issuer_signature = r.blob();
  x.created_at = r.u32();
  return x;
}

VaRecord read_var(Reader& r) {
  VaRecord v;
  v.var_id = r.digest();
  v.target_key_id = r.digest();
  v.kind = read_enum<VarKind>(r, 2);
  v.created_at_block = r.u64();
  v.status = read_enum<VarStatus>(r, 3);
  return v;
}

}  // namespace

Bytes canonical_serialize(const Record& record) {
  return std::visit(
      [&](const auto& r) {
        check_fields(r);
        return serialize_as(r, tag_of(record), Fields::full);
      },
      record);
}

Record deserialize(ByteView bytes) {
  Reader r(bytes);
  std::uint8_t tag = r.u8();
  Record out;
  switch (static_cast<RecordTag>(tag)) {
    case RecordTag::public_key: out = read_key(r); break;
    case RecordTag::challenge: out = read_challenge(r); break;
    case RecordTag::response: out = read_response(r); break;
    case RecordTag::va_result: out = read_result(r); break;
    case RecordTag::signature: out = read_signature(r); break;
    case RecordTag::revocation: out = read_revocation(r); break;
    case RecordTag::var: out = read_var(r); break;
    default: throw Error(ErrorCode::parse, "unknown record tag " + std::to_string(tag));
  }
  if (!r.done()) throw Error(ErrorCode::parse, "trailing bytes after record body");
  return out;
}

Digest record_id(const Record& record) {
  return std::visit(
      [&](const auto& r) {
        check_fields(r);
        return crypto::hash(serialize_as(r, tag_of(record), Fields::without_id));
      },
      record);
}

Digest compute_key_id(const PublicKeyRecord& r) { return id_over(r, Fields::without_id); }
Digest compute_challenge_id(const ChallengeRecord& r) { return id_over(r, Fields::without_id_and_poster); }
Digest compute_response_id(const ResponseRecord& r) { return id_over(r, Fields::without_id_and_poster); }
Digest compute_result_id(const VaResultRecord& r) { return id_over(r, Fields::without_id); }
Digest compute_signature_id(const SignatureRecord& r) { return id_over(r, Fields::without_id); }
Digest compute_revocation_id(const RevocationRecord& r) { return id_over(r, Fields::without_id); }
Digest compute_var_id(const VaRecord& r) { return id_over(r, Fields::without_id); }

Bytes signature_message(const SignatureRecord& r) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(RecordTag::signature));
  write_body(w, r, Fields::without_id, false);
  return std::move(w).take();
}

Bytes revocation_message(const RevocationRecord& r) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(RecordTag::revocation));
  write_body(w, r, Fields::without_id, false);
  return std::move(w).take();
}

Bytes response_message(const Digest& challenge_id, ByteView payload) {
  Bytes out(challenge_id.bytes.begin(), challenge_id.bytes.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

PublicKeyRecord finalize(PublicKeyRecord r) {
  r.key_id = compute_key_id(r);
  return r;
}
ChallengeRecord finalize(ChallengeRecord r) {
  r.challenge_id = compute_challenge_id(r);
  return r;
}
ResponseRecord finalize(ResponseRecord r) {
  r.response_id = compute_response_id(r);
  return r;
}
VaResultRecord finalize(VaResultRecord r) {
  r.result_id = compute_result_id(r);
  return r;
}
SignatureRecord finalize(SignatureRecord r) {
  r.signature_id = compute_signature_id(r);
  return r;
}
RevocationRecord finalize(RevocationRecord r) {
  r.revocation_id = compute_revocation_id(r);
  return r;
}
VaRecord finalize(VaRecord r) {
  r.var_id = compute_var_id(r);
  return r;
}

void check_invariants(const Record& record) {
  std::visit(
      [](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        check_fields(r);
        bool id_ok = true;
        if constexpr (std::is_same_v<R, PublicKeyRecord>) id_ok = r.key_id == compute_key_id(r);
        if constexpr (std::is_same_v<R, ChallengeRecord>) id_ok = r.challenge_id == compute_challenge_id(r);
        if constexpr (std::is_same_v<R, ResponseRecord>) id_ok = r.response_id == compute_response_id(r);
        if constexpr (std::is_same_v<R, VaResultRecord>) id_ok = r.result_id == compute_result_id(r);
        if constexpr (std::is_same_v<R, SignatureRecord>) id_ok = r.signature_id == compute_signature_id(r);
        if constexpr (std::is_same_v<R, RevocationRecord>) id_ok = r.revocation_id == compute_revocation_id(r);
        if constexpr (std::is_same_v<R, VaRecord>) id_ok = r.var_id == compute_var_id(r);
        if (!id_ok) violation("stored id does not match record contents");
      },
      record);
}

bool satisfies_invariants(const Record& record) {
  try {
    check_invariants(record);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::vector<Digest> referenced_keys(const Record& record) {
  struct Visitor {
    std::vector<Digest> operator()(const PublicKeyRecord& r) const { return {r.key_id}; }
    std::vector<Digest> operator()(const ChallengeRecord& r) const {
      return {r.challenger_key_id, r.target_key_id};
    }
    std::vector<Digest> operator()(const ResponseRecord& r) const { return {r.responder_key_id}; }
    std::vector<Digest> operator()(const VaResultRecord& r) const {
      return {r.verifier_key_id, r.target_key_id};
    }
    std::vector<Digest> operator()(const SignatureRecord& r) const {
      return {r.signer_key_id, r.signee_key_id};
    }
    std::vector<Digest> operator()(const RevocationRecord& r) const {
      if (r.kind == RevocationKind::key) return {r.target_id};
      return {r.issuer_key_id};
    }
    std::vector<Digest> operator()(const VaRecord& r) const { return {r.target_key_id}; }
  };
  return std::visit(Visitor{}, record);
}

PublicKeyRecord make_key_record(const EntityDescriptor& owner, const KeyMaterial& key,
                                Day created_at, Day lifetime_days) {
  PublicKeyRecord r;
  r.owner = owner;
  r.public_bytes = key.public_bytes;
  r.key_length_bits = key.key_length_bits;
  r.scheme = key.scheme;
  r.created_at = created_at;
  r.expires_at = created_at + lifetime_days;
  return finalize(std::move(r));
}

}  // namespace authcoin
