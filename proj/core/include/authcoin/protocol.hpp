#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "authcoin/chain.hpp"
#include "authcoin/keylife.hpp"
#include "authcoin/rng.hpp"

namespace authcoin::protocol {

inline constexpr Day kDefaultDeadlineDays = 14;
inline constexpr std::size_t kNonceSize = 16;

/// Whether the parties can meet or share a side channel.
enum class Locality : std::uint8_t { local_with_info = 0, global_with_info = 1, global_no_info = 2 };
std::string_view to_string(Locality locality);

struct ChallengeSpec {
  VaKind kind = VaKind::validation;
  Visibility visibility = Visibility::open;
  Locality locality = Locality::global_with_info;
  /// The task handed to the target; a correct answer echoes it back.
  Bytes payload_template;
  Day deadline_days = kDefaultDeadlineDays;
};

/// forward: initiator verifies responder. backward: the reverse.
enum class Direction : std::uint8_t { forward = 0, backward = 1 };
enum class SessionState : std::uint8_t {
  created,
  forward_challenged,
  forward_done,
  backward_challenged,
  complete,
  failed,
};
enum class FulfilOutcome : std::uint8_t { correct, wrong, none };
/// The verifier's judgement of authentication evidence.
enum class Verdict : std::uint8_t { accept, reject };
enum class Party : std::uint8_t { initiator, responder };

std::string_view to_string(Direction d);
std::string_view to_string(SessionState s);

struct DirectionRecords {
  std::optional<ChallengeRecord> challenge;
  std::optional<ResponseRecord> response;
  std::optional<VaResultRecord> result;
  std::optional<SignatureRecord> signature;
  /// Known to the verifier only.
  Bytes nonce;
};

/// Off-chain state of one bidirectional exchange, owned by one party at a time.
struct VaSession {
  Digest session_id;
  Digest initiator_key_id;
  Digest responder_key_id;
  VaKind kind = VaKind::validation;
  Visibility visibility = Visibility::open;
  Locality locality = Locality::global_with_info;
  Bytes payload_template;
  Day deadline_days = kDefaultDeadlineDays;
  std::optional<Digest> var_ref;
  SessionState state = SessionState::created;
  std::array<DirectionRecords, 2> directions;
  /// Shared by the two parties, never posted. Present iff opaque.
  std::optional<Bytes> opaque_secret;

  DirectionRecords& records(Direction d) { return directions[static_cast<std::size_t>(d)]; }
  const DirectionRecords& records(Direction d) const { return directions[static_cast<std::size_t>(d)]; }
  const Digest& verifier_of(Direction d) const {
    return d == Direction::forward ? initiator_key_id : responder_key_id;
  }
  const Digest& target_of(Direction d) const {
    return d == Direction::forward ? responder_key_id : initiator_key_id;
  }
  ByteView secret() const { return opaque_secret ? ByteView(*opaque_secret) : ByteView{}; }
};

/// Both keys must pass formal validation. Throws FormalValidationFailed
/// (subject = failing key), SelfVerification, UnsupportedCombination.
VaSession start_session(const Chain& chain, const Digest& initiator_key_id, const Digest& responder_key_id,
                        const ChallengeSpec& spec, Day now, Rng& rng,
                        std::uint32_t min_bits = keylife::kDefaultMinBits,
                        std::optional<Digest> var_ref = std::nullopt);

/// Encrypts nonce | template to the direction's target. Throws WrongState
/// unless forward follows `created` or backward follows `forward_done`.
ChallengeRecord issue_challenge(const Chain& chain, VaSession& session, Direction direction, Rng& rng, Day now);

/// The target's side. `none` models an unreachable or silent account and
/// returns no record. Throws DecryptionFailure if `actor_keys` cannot open
/// the challenge. `session_secret` is needed for opaque challenges.
std::optional<ResponseRecord> fulfil_challenge(const KeyMaterial& actor_keys, const ChallengeRecord& challenge,
                                               FulfilOutcome outcome, Day now, ByteView session_secret = {});

struct Evaluation {
  VaResultRecord result;
  std::optional<SignatureRecord> signature;
};

/// The verifier's side. Success needs a timely response with a valid
/// signature, the right nonce and answer, and for authentication an
/// `accept` verdict. Open successes also yield a signature record. A
/// missing response fails with no_response once the deadline has passed.
Evaluation evaluate(const Chain& chain, VaSession& session, Direction direction,
                    const std::optional<ResponseRecord>& response, const KeyMaterial& verifier_keys, Day now,
                    Verdict verdict = Verdict::accept);

/// The party's own copies of the session records, ready for the pending pool.
std::vector<Record> post_session_records(const VaSession& session, Party party);

struct MissingSide {
  RecordTag tag;
  Digest challenge_id;
  Digest missing_party;
};

struct Divergence {
  Digest record_id;
  std::string reason;
};

struct MismatchReport {
  bool consistent = true;
  std::vector<MissingSide> missing_sides;
  std::vector<Divergence> divergent_records;
};

/// Cross-checks the two parties' independently posted copies and flags
/// verdicts the posted evidence contradicts.
MismatchReport detect_posting_mismatch(const Chain& chain, const Digest& session_id);

}  // namespace authcoin::protocol
