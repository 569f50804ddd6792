#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "authcoin/chain.hpp"
#include "authcoin/protocol.hpp"

namespace authcoin::var {

/// Unclaimed VARs older than this many blocks count as expired.
inline constexpr Height kVarExpiryBlocks = 30;

struct SelectionParams {
  unsigned prefix_bits = 1;
  std::uint32_t prefix_pattern = 0;
  double var_rate = 0.05;

  /// Throws InvalidConfig unless prefix_bits is in [1, 16], the pattern
  /// fits in prefix_bits and var_rate is in (0, 1].
  void check() const;
};

/// Keys eligible as VAR targets as of block `height`: registered at or
/// below it, unrevoked at or below it and unexpired at its timestamp.
/// In registration order.
std::vector<Digest> valid_keys_at(const Chain& chain, Height height);

/// The VARs block `height` produces: ceil(var_rate * K) distinct targets
/// drawn from the K valid keys with an RNG seeded from the block hash.
/// Any node recomputes the same list.
std::vector<VaRecord> generate_vars(const Chain& chain, Height height, const SelectionParams& params);

/// The prefix test alone: first prefix_bits of
/// hash(serialize(var) | serialize(key record)) equal the pattern.
bool prefix_matches(const VaRecord& var, const PublicKeyRecord& key, const SelectionParams& params);

/// Prefix test, key registered strictly before the VAR's block, not the
/// target, and valid at the chain tip.
bool eligible(const VaRecord& var, const PublicKeyRecord& verifier_key, const Chain& chain,
              const SelectionParams& params);

/// Status derived from the chain: the first challenge carrying the VAR's id
/// decides its session. A failure result fails the VAR, two successes
/// fulfil it; unclaimed VARs expire after kVarExpiryBlocks.
VarStatus var_status(const Chain& chain, const Digest& var_id);

/// Session kind serving a VAR kind. `both` is met by authentication, which
/// includes proof of key possession.
VaKind session_kind(VarKind kind);

/// Opens the session that claims a VAR (initiator = verifier, responder =
/// target, open visibility). Throws VarClosed, NotEligible, plus the errors
/// of start_session.
protocol::VaSession fulfil_var(const Chain& chain, const Digest& var_id, const Digest& verifier_key_id,
                               const SelectionParams& params, Day now, Rng& rng,
                               std::uint32_t min_bits = keylife::kDefaultMinBits,
                               Day deadline_days = protocol::kDefaultDeadlineDays);

struct VarStatistics {
  std::size_t generated = 0;
  std::size_t open = 0;
  std::size_t fulfilled = 0;
  std::size_t failed = 0;
  std::size_t expired = 0;
  /// V&A results targeting each key, VAR-driven or not.
  std::map<Digest, std::size_t> per_key_frequency;
};

VarStatistics var_statistics(const Chain& chain);

/// VARs on chain that no generation event accounts for: every VAR created
/// from a block must be one that generate_vars yields for that block.
std::vector<Digest> audit_vars(const Chain& chain, const SelectionParams& params);

}  // namespace authcoin::var
