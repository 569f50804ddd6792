#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "authcoin/records.hpp"

namespace authcoin {

inline constexpr unsigned kDefaultDifficulty = 8;

struct Block {
  Height height = 0;
  Digest prev_hash;
  Digest merkle_root;
  Day timestamp = 0;
  std::uint64_t nonce = 0;
  std::vector<Record> records;
  Digest block_hash;

  bool operator==(const Block&) const = default;
};

/// hash(height | prev_hash | merkle_root | timestamp | nonce).
Digest compute_block_hash(const Block& block);
/// hash over the concatenated record ids, in order.
Digest compute_merkle_root(std::span<const Record> records);
Bytes serialize_block(const Block& block);

struct RecordLocation {
  Height height = 0;
  std::uint32_t position = 0;
  auto operator<=>(const RecordLocation&) const = default;
};

struct RecordRef {
  const Record* record = nullptr;
  RecordLocation location;
};

/// Lookup tables rebuilt as blocks are appended. Every list is in chain order.
struct ChainIndex {
  std::unordered_map<Digest, RecordLocation> by_record_id;
  std::unordered_map<Digest, RecordLocation> keys;
  std::unordered_map<Digest, std::vector<RecordLocation>> challenges;       // by challenge_id
  std::unordered_map<Digest, std::vector<RecordLocation>> responses;        // by challenge_id
  std::unordered_map<Digest, RecordLocation> results;                       // by result_id
  std::unordered_map<Digest, std::vector<RecordLocation>> results_for;      // by challenge_id
  std::unordered_map<Digest, RecordLocation> signatures;                    // by signature_id
  std::unordered_map<Digest, std::vector<RecordLocation>> revocations_of;   // by target id
  std::unordered_map<Digest, RecordLocation> vars;                          // by var_id
  std::unordered_map<Digest, std::vector<RecordLocation>> var_challenges;   // by var_id
  std::unordered_map<Digest, std::vector<RecordLocation>> by_session;       // challenges + results
  std::unordered_map<Digest, std::vector<RecordLocation>> involving;        // by key id
  std::vector<RecordLocation> all_keys;
  std::vector<RecordLocation> all_results;
  std::vector<RecordLocation> all_signatures;
  std::vector<RecordLocation> all_vars;

  void add(const Record& record, RecordLocation loc);
};

/// Append-only proof-of-work chain: one node's view, single writer.
/// Appending never touches existing blocks; a failed append leaves the
/// chain unchanged.
class Chain {
 public:
  explicit Chain(unsigned difficulty = kDefaultDifficulty, Day genesis_day = 0);

  unsigned difficulty() const { return difficulty_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& tip() const { return blocks_.back(); }
  Height tip_height() const { return blocks_.back().height; }
  Day tip_timestamp() const { return blocks_.back().timestamp; }
  const ChainIndex& index() const { return index_; }

  const Record& at(RecordLocation loc) const { return blocks_[loc.height].records[loc.position]; }
  template <typename R>
  const R& at_as(RecordLocation loc) const {
    return std::get<R>(at(loc));
  }
  Day timestamp_at(Height h) const { return blocks_[h].timestamp; }

  const PublicKeyRecord* key(const Digest& key_id) const;
  std::optional<RecordLocation> key_location(const Digest& key_id) const;
  const ChallengeRecord* challenge(const Digest& challenge_id) const;
  const VaResultRecord* result(const Digest& result_id) const;
  const SignatureRecord* signature(const Digest& signature_id) const;
  const VaRecord* var(const Digest& var_id) const;
  bool contains(const Digest& record_id) const { return index_.by_record_id.contains(record_id); }

  /// Validate then append. Throws BrokenLink, InsufficientWork, InvalidBlock
  /// or InvalidRecord.
  void append(Block block);
  /// mine_block + append without validating twice.
  const Block& mine(std::vector<Record> pending, Day timestamp);

  bool operator==(const Chain& other) const {
    return difficulty_ == other.difficulty_ && blocks_ == other.blocks_;
  }

 private:
  friend Block mine_block(const Chain&, std::vector<Record>, Day);
  friend Chain load(const std::filesystem::path&);
  friend Chain chain_from_bytes(ByteView);

  struct Unvalidated {};
  Chain(unsigned difficulty, Unvalidated) : difficulty_(difficulty) {}

  void validate_records(std::span<const Record> records, Height height, Day timestamp) const;
  void commit(Block block);

  unsigned difficulty_;
  std::vector<Block> blocks_;
  ChainIndex index_;
};

/// Deterministic nonce search from 0 upward. Throws EmptyPending or
/// InvalidRecord (with the offending record id as subject).
Block mine_block(const Chain& chain, std::vector<Record> pending, Day timestamp);
Chain append_block(Chain chain, Block block);

struct AuditReport {
  bool valid = true;
  std::optional<Height> first_bad_height;
  std::vector<std::string> reasons;
};

/// Structural audit of every block: links, heights, timestamps, merkle
/// roots, hashes, work, and per-record invariants. Independent of the index.
AuditReport verify_chain(const Chain& chain);
AuditReport verify_blocks(std::span<const Block> blocks, unsigned difficulty);

/// Records from blocks stamped within [now - window_days, now], in chain order.
std::vector<RecordRef> traverse(const Chain& chain, Day window_days, Day now,
                                const std::function<bool(const Record&)>& predicate);

// File: "ACHN" | version (1) | difficulty (1) | block count (4, BE) | blocks.
inline constexpr std::uint8_t kChainFormatVersion = 1;

Bytes chain_to_bytes(const Chain& chain);
/// Parses, audits and re-validates; throws CorruptFile with the first bad height.
Chain chain_from_bytes(ByteView bytes);
/// Audit of raw file bytes without throwing. Parse failures are reported
/// at the height of the block being parsed (0 for the file header).
AuditReport verify_file_bytes(ByteView bytes);

void persist(const Chain& chain, const std::filesystem::path& path);
Chain load(const std::filesystem::path& path);

}  // namespace authcoin
