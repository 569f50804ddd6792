#include "authcoin/chain.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "authcoin/error.hpp"

namespace authcoin {

namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'C', 'H', 'N'};

Bytes header_bytes(const Block& b) {
  Writer w;
  w.u64(b.height);
  w.digest(b.prev_hash);
  w.digest(b.merkle_root);
  w.u32(b.timestamp);
  w.u64(b.nonce);
  return std::move(w).take();
}

Day created_at_of(const Record& record) {
  struct Visitor {
    Day operator()(const PublicKeyRecord& r) const { return r.created_at; }
    Day operator()(const ChallengeRecord& r) const { return r.created_at; }
    Day operator()(const ResponseRecord& r) const { return r.created_at; }
    Day operator()(const VaResultRecord& r) const { return r.created_at; }
    Day operator()(const SignatureRecord& r) const { return r.created_at; }
    Day operator()(const RevocationRecord& r) const { return r.created_at; }
    Day operator()(const VaRecord&) const { return 0; }
  };
  return std::visit(Visitor{}, record);
}

[[noreturn]] void reject(const std::string& why) { throw Error(ErrorCode::invalid_record, why); }

// Lookups over the chain plus the records already accepted into the block
// being validated.
class StagedView {
 public:
  explicit StagedView(const Chain& chain) : chain_(chain) {}

  void add(const Record& record, const Digest& rid) {
    ids_.insert(rid);
    std::visit(
        [&](const auto& r) {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, PublicKeyRecord>) keys_[r.key_id] = &r;
          if constexpr (std::is_same_v<R, ChallengeRecord>) challenges_.emplace(r.challenge_id, &r);
          if constexpr (std::is_same_v<R, VaResultRecord>) results_[r.result_id] = &r;
          if constexpr (std::is_same_v<R, SignatureRecord>) signatures_[r.signature_id] = &r;
          if constexpr (std::is_same_v<R, VaRecord>) vars_[r.var_id] = &r;
        },
        record);
  }

  bool contains(const Digest& rid) const { return chain_.contains(rid) || ids_.contains(rid); }

  const PublicKeyRecord* key(const Digest& id) const {
    if (auto* k = chain_.key(id)) return k;
    auto it = keys_.find(id);
    return it == keys_.end() ? nullptr : it->second;
  }
  const ChallengeRecord* challenge(const Digest& id) const {
    if (auto* c = chain_.challenge(id)) return c;
    auto it = challenges_.find(id);
    return it == challenges_.end() ? nullptr : it->second;
  }
  const VaResultRecord* result(const Digest& id) const {
    if (auto* r = chain_.result(id)) return r;
    auto it = results_.find(id);
    return it == results_.end() ? nullptr : it->second;
  }
  const SignatureRecord* signature(const Digest& id) const {
    if (auto* s = chain_.signature(id)) return s;
    auto it = signatures_.find(id);
    return it == signatures_.end() ? nullptr : it->second;
  }
  const VaRecord* var(const Digest& id) const {
    if (auto* v = chain_.var(id)) return v;
    auto it = vars_.find(id);
    return it == vars_.end() ? nullptr : it->second;
  }

 private:
  const Chain& chain_;
  std::unordered_set<Digest> ids_;
  std::unordered_map<Digest, const PublicKeyRecord*> keys_;
  std::unordered_map<Digest, const ChallengeRecord*> challenges_;
  std::unordered_map<Digest, const VaResultRecord*> results_;
  std::unordered_map<Digest, const SignatureRecord*> signatures_;
  std::unordered_map<Digest, const VaRecord*> vars_;
};

const PublicKeyRecord& require_key(const StagedView& view, const Digest& id, const char* role) {
  const PublicKeyRecord* k = view.key(id);
  if (!k) reject(std::string(role) + " key " + id.short_hex() + " is not registered");
  return *k;
}

bool signed_by(const PublicKeyRecord& key, ByteView message, ByteView signature) {
  try {
    return crypto::verify(key.key(), message, signature);
  } catch (const Error&) {
    return false;
  }
}

// Referential rules for a record against chain state plus earlier records of
// the same block.
void check_references(const Chain& chain, const StagedView& view, const Record& record,
                      Height height) {
  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ChallengeRecord>) {
          require_key(view, r.challenger_key_id, "challenger");
          require_key(view, r.target_key_id, "target");
          if (r.var_ref && !view.var(*r.var_ref)) reject("challenge references an unknown VAR");
        } else if constexpr (std::is_same_v<R, ResponseRecord>) {
          const ChallengeRecord* c = view.challenge(r.challenge_id);
          if (!c) reject("response to an unknown challenge");
          if (r.responder_key_id != c->target_key_id) reject("responder is not the challenge target");
          if (r.posted_by != c->challenger_key_id && r.posted_by != c->target_key_id)
            reject("response posted by a non-party");
          const PublicKeyRecord& responder = require_key(view, r.responder_key_id, "responder");
          if (!signed_by(responder, response_message(r.challenge_id, r.payload), r.responder_signature))
            reject("response signature does not verify");
        } else if constexpr (std::is_same_v<R, VaResultRecord>) {
          const ChallengeRecord* c = view.challenge(r.challenge_id);
          if (!c) reject("result for an unknown challenge");
          if (r.verifier_key_id != c->challenger_key_id || r.target_key_id != c->target_key_id)
            reject("result parties do not match the challenge");
          if (r.session_id != c->session_id) reject("result session does not match the challenge");
        } else if constexpr (std::is_same_v<R, SignatureRecord>) {
          const VaResultRecord* res = view.result(r.result_ref);
          if (!res) reject("signature references an unknown result");
          if (res->outcome != Outcome::success) reject("signature references a failed result");
          const ChallengeRecord* c = view.challenge(res->challenge_id);
          if (!c || c->visibility != Visibility::open) reject("signature over an opaque session");
          if (c->kind != r.kind) reject("signature kind differs from the session kind");
          if (r.signer_key_id != res->verifier_key_id || r.signee_key_id != res->target_key_id)
            reject("signature parties do not match the result");
          const PublicKeyRecord& signer = require_key(view, r.signer_key_id, "signer");
          const PublicKeyRecord& signee = require_key(view, r.signee_key_id, "signee");
          if (r.expires_at > signer.expires_at || r.expires_at > signee.expires_at)
            reject("signature outlives one of its keys");
          if (!signed_by(signer, signature_message(r), r.signer_signature))
            reject("signer signature does not verify");
        } else if constexpr (std::is_same_v<R, RevocationRecord>) {
          if (r.kind == RevocationKind::key) {
            const PublicKeyRecord& target = require_key(view, r.target_id, "revoked");
            if (r.issuer_key_id != r.target_id) reject("key revocation not issued by the key itself");
            if (!signed_by(target, revocation_message(r), r.issuer_signature))
              reject("revocation signature does not verify");
          } else {
            const SignatureRecord* s = view.signature(r.target_id);
            if (!s) reject("revocation of an unknown signature");
            if (r.issuer_key_id != s->signer_key_id) reject("signature revocation not issued by the signer");
            const PublicKeyRecord& issuer = require_key(view, r.issuer_key_id, "issuer");
            if (!signed_by(issuer, revocation_message(r), r.issuer_signature))
              reject("revocation signature does not verify");
          }
        } else if constexpr (std::is_same_v<R, VaRecord>) {
          if (r.status != VarStatus::open) reject("VAR must be posted with status open");
          if (r.created_at_block >= height) reject("VAR must come from an earlier block");
          auto loc = chain.key_location(r.target_key_id);
          if (!loc || loc->height > r.created_at_block) reject("VAR target not registered at generation");
          const PublicKeyRecord& target = *chain.key(r.target_key_id);
          Day generated_at = chain.timestamp_at(r.created_at_block);
          if (generated_at >= target.expires_at) reject("VAR target expired at generation");
          if (auto it = chain.index().revocations_of.find(r.target_key_id);
              it != chain.index().revocations_of.end()) {
            for (const auto& rl : it->second)
              if (rl.height <= r.created_at_block) reject("VAR target revoked at generation");
          }
        }
      },
      record);
}

}  // namespace

Digest compute_block_hash(const Block& block) { return crypto::hash(header_bytes(block)); }

Digest compute_merkle_root(std::span<const Record> records) {
  Bytes ids;
  ids.reserve(records.size() * 32);
  for (const auto& r : records) {
    Digest id = record_id(r);
    ids.insert(ids.end(), id.bytes.begin(), id.bytes.end());
  }
  return crypto::hash(ids);
}

Bytes serialize_block(const Block& block) {
  Writer w;
  w.raw(header_bytes(block));
  w.digest(block.block_hash);
  w.u32(static_cast<std::uint32_t>(block.records.size()));
  for (const auto& r : block.records) w.blob(canonical_serialize(r));
  return std::move(w).take();
}

void ChainIndex::add(const Record& record, RecordLocation loc) {
  by_record_id.emplace(record_id(record), loc);
  for (const Digest& k : referenced_keys(record)) {
    auto& v = involving[k];
    if (v.empty() || v.back() != loc) v.push_back(loc);
  }
  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, PublicKeyRecord>) {
          keys.emplace(r.key_id, loc);
          all_keys.push_back(loc);
        } else if constexpr (std::is_same_v<R, ChallengeRecord>) {
          challenges[r.challenge_id].push_back(loc);
          by_session[r.session_id].push_back(loc);
          if (r.var_ref) var_challenges[*r.var_ref].push_back(loc);
        } else if constexpr (std::is_same_v<R, ResponseRecord>) {
          responses[r.challenge_id].push_back(loc);
        } else if constexpr (std::is_same_v<R, VaResultRecord>) {
          results.emplace(r.result_id, loc);
          results_for[r.challenge_id].push_back(loc);
          by_session[r.session_id].push_back(loc);
          all_results.push_back(loc);
        } else if constexpr (std::is_same_v<R, SignatureRecord>) {
          signatures.emplace(r.signature_id, loc);
          all_signatures.push_back(loc);
        } else if constexpr (std::is_same_v<R, RevocationRecord>) {
          revocations_of[r.target_id].push_back(loc);
          if (r.kind == RevocationKind::signature) {
            auto& v = involving[r.issuer_key_id];
            if (v.empty() || v.back() != loc) v.push_back(loc);
          }
        } else if constexpr (std::is_same_v<R, VaRecord>) {
          vars.emplace(r.var_id, loc);
          all_vars.push_back(loc);
        }
      },
      record);
}

Chain::Chain(unsigned difficulty, Day genesis_day) : difficulty_(difficulty) {
  if (difficulty == 0 || difficulty > 64)
    throw Error(ErrorCode::invalid_config, "difficulty must be in [1, 64]");
  Block genesis;
  genesis.timestamp = genesis_day;
  genesis.merkle_root = compute_merkle_root({});
  for (;; ++genesis.nonce) {
    genesis.block_hash = compute_block_hash(genesis);
    if (genesis.block_hash.leading_zero_bits() >= difficulty_) break;
  }
  commit(std::move(genesis));
}

const PublicKeyRecord* Chain::key(const Digest& key_id) const {
  auto it = index_.keys.find(key_id);
  return it == index_.keys.end() ? nullptr : &at_as<PublicKeyRecord>(it->second);
}

std::optional<RecordLocation> Chain::key_location(const Digest& key_id) const {
  auto it = index_.keys.find(key_id);
  if (it == index_.keys.end()) return std::nullopt;
  return it->second;
}

const ChallengeRecord* Chain::challenge(const Digest& challenge_id) const {
  auto it = index_.challenges.find(challenge_id);
  return it == index_.challenges.end() ? nullptr : &at_as<ChallengeRecord>(it->second.front());
}

const VaResultRecord* Chain::result(const Digest& result_id) const {
  auto it = index_.results.find(result_id);
  return it == index_.results.end() ? nullptr : &at_as<VaResultRecord>(it->second);
}

const SignatureRecord* Chain::signature(const Digest& signature_id) const {
  auto it = index_.signatures.find(signature_id);
  return it == index_.signatures.end() ? nullptr : &at_as<SignatureRecord>(it->second);
}

const VaRecord* Chain::var(const Digest& var_id) const {
  auto it = index_.vars.find(var_id);
  return it == index_.vars.end() ? nullptr : &at_as<VaRecord>(it->second);
}

void Chain::validate_records(std::span<const Record> records, Height height, Day timestamp) const {
  StagedView view(*this);
  for (const Record& record : records) {
    Digest rid;
    try {
      check_invariants(record);
      rid = record_id(record);
    } catch (const Error& e) {
      throw Error(ErrorCode::invalid_record, e.what()).with_height(height);
    }
    try {
      if (view.contains(rid)) reject("duplicate record");
      if (created_at_of(record) > timestamp) reject("record created after its block timestamp");
      check_references(*this, view, record, height);
    } catch (const Error& e) {
      throw Error(ErrorCode::invalid_record, e.what()).with_subject(rid).with_height(height);
    }
    view.add(record, rid);
  }
}

void Chain::commit(Block block) {
  blocks_.push_back(std::move(block));
  const Block& b = blocks_.back();
  for (std::uint32_t i = 0; i < b.records.size(); ++i) index_.add(b.records[i], {b.height, i});
}

void Chain::append(Block block) {
  const Block& last = tip();
  if (block.height != last.height + 1)
    throw Error(ErrorCode::broken_link, "block height " + std::to_string(block.height) +
                                            " does not follow tip " + std::to_string(last.height))
        .with_height(block.height);
  if (block.prev_hash != last.block_hash)
    throw Error(ErrorCode::broken_link, "prev_hash does not match tip").with_height(block.height);
  if (block.timestamp < last.timestamp)
    throw Error(ErrorCode::invalid_block, "timestamp precedes tip").with_height(block.height);
  if (block.records.empty())
    throw Error(ErrorCode::invalid_block, "non-genesis block without records").with_height(block.height);
  Digest merkle;
  try {
    merkle = compute_merkle_root(block.records);
  } catch (const Error& e) {
    throw Error(ErrorCode::invalid_record, e.what()).with_height(block.height);
  }
  if (merkle != block.merkle_root)
    throw Error(ErrorCode::invalid_block, "merkle root mismatch").with_height(block.height);
  if (compute_block_hash(block) != block.block_hash)
    throw Error(ErrorCode::insufficient_work, "block hash does not match header").with_height(block.height);
  if (block.block_hash.leading_zero_bits() < difficulty_)
    throw Error(ErrorCode::insufficient_work, "block hash above difficulty target").with_height(block.height);
  validate_records(block.records, block.height, block.timestamp);
  commit(std::move(block));
}

const Block& Chain::mine(std::vector<Record> pending, Day timestamp) {
  commit(mine_block(*this, std::move(pending), timestamp));
  return tip();
}

Block mine_block(const Chain& chain, std::vector<Record> pending, Day timestamp) {
  if (pending.empty()) throw Error(ErrorCode::empty_pending, "nothing to mine");
  Block block;
  block.height = chain.tip_height() + 1;
  block.prev_hash = chain.tip().block_hash;
  if (timestamp < chain.tip_timestamp())
    throw Error(ErrorCode::invalid_block, "timestamp precedes tip").with_height(block.height);
  block.timestamp = timestamp;
  chain.validate_records(pending, block.height, block.timestamp);
  block.records = std::move(pending);
  block.merkle_root = compute_merkle_root(block.records);
  for (block.nonce = 0;; ++block.nonce) {
    block.block_hash = compute_block_hash(block);
    if (block.block_hash.leading_zero_bits() >= chain.difficulty()) break;
  }
  return block;
}

Chain append_block(Chain chain, Block block) {
  chain.append(std::move(block));
  return chain;
}

AuditReport verify_blocks(std::span<const Block> blocks, unsigned difficulty) {
  AuditReport report;
  auto fail = [&](Height h, const std::string& why) {
    report.valid = false;
    report.first_bad_height = h;
    report.reasons.push_back("height " + std::to_string(h) + ": " + why);
    if (h + 1 < blocks.size())
      report.reasons.push_back("heights " + std::to_string(h) + ".." + std::to_string(blocks.size() - 1) +
                               " unverifiable");
    return report;
  };
  if (blocks.empty()) return fail(0, "no genesis block");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    Height h = i;
    if (b.height != h) return fail(h, "height field is " + std::to_string(b.height));
    if (i == 0) {
      if (!b.prev_hash.is_zero()) return fail(h, "genesis prev_hash must be zero");
      if (!b.records.empty()) return fail(h, "genesis block carries records");
    } else {
      if (b.prev_hash != blocks[i - 1].block_hash) return fail(h, "prev_hash does not link to predecessor");
      if (b.timestamp < blocks[i - 1].timestamp) return fail(h, "timestamp decreases");
      if (b.records.empty()) return fail(h, "non-genesis block without records");
    }
    for (const Record& r : b.records) {
      if (!satisfies_invariants(r)) return fail(h, "record violates its invariants");
    }
    Digest merkle;
    try {
      merkle = compute_merkle_root(b.records);
    } catch (const Error& e) {
      return fail(h, e.what());
    }
    if (merkle != b.merkle_root) return fail(h, "merkle root mismatch");
    if (compute_block_hash(b) != b.block_hash) return fail(h, "block hash mismatch");
    if (b.block_hash.leading_zero_bits() < difficulty) return fail(h, "insufficient proof of work");
  }
  return report;
}

AuditReport verify_chain(const Chain& chain) { return verify_blocks(chain.blocks(), chain.difficulty()); }

std::vector<RecordRef> traverse(const Chain& chain, Day window_days, Day now,
                                const std::function<bool(const Record&)>& predicate) {
  if (window_days == 0) throw Error(ErrorCode::invalid_config, "window must be positive");
  Day from = now >= window_days ? now - window_days : 0;
  std::vector<RecordRef> out;
  for (const Block& b : chain.blocks()) {
    if (b.timestamp < from || b.timestamp > now) continue;
    for (std::uint32_t i = 0; i < b.records.size(); ++i) {
      if (!predicate || predicate(b.records[i])) out.push_back({&b.records[i], {b.height, i}});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

Bytes chain_to_bytes(const Chain& chain) {
  Writer w;
  w.raw(kMagic);
  w.u8(kChainFormatVersion);
  w.u8(static_cast<std::uint8_t>(chain.difficulty()));
  w.u32(static_cast<std::uint32_t>(chain.blocks().size()));
  for (const Block& b : chain.blocks()) w.raw(serialize_block(b));
  return std::move(w).take();
}

namespace {

struct ParsedFile {
  unsigned difficulty = 0;
  std::vector<Block> blocks;
  std::optional<Height> error_height;
  std::string error;
};

ParsedFile parse_file(ByteView bytes) {
  ParsedFile out;
  Reader r(bytes);
  try {
    Bytes magic = r.raw(4);
    if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) throw Error(ErrorCode::parse, "bad magic");
    if (r.u8() != kChainFormatVersion) throw Error(ErrorCode::parse, "unsupported format version");
    out.difficulty = r.u8();
    if (out.difficulty == 0 || out.difficulty > 64) throw Error(ErrorCode::parse, "difficulty out of range");
    std::uint32_t count = r.u32();
    if (count == 0) throw Error(ErrorCode::parse, "file holds no blocks");
    for (std::uint32_t i = 0; i < count; ++i) {
      try {
        Block b;
        b.height = r.u64();
        b.prev_hash = r.digest();
        b.merkle_root = r.digest();
        b.timestamp = r.u32();
        b.nonce = r.u64();
        b.block_hash = r.digest();
        std::uint32_t n = r.u32();
        if (n > r.remaining()) throw Error(ErrorCode::parse, "record count exceeds file size");
        b.records.reserve(n);
        for (std::uint32_t j = 0; j < n; ++j) b.records.push_back(deserialize(r.blob()));
        out.blocks.push_back(std::move(b));
      } catch (const Error& e) {
        out.error_height = i;
        out.error = std::string("block ") + std::to_string(i) + ": " + e.what();
        return out;
      }
    }
    if (!r.done()) {
      out.error_height = count > 0 ? count - 1 : 0;
      out.error = "trailing bytes after last block";
    }
  } catch (const Error& e) {
    out.error_height = 0;
    out.error = std::string("header: ") + e.what();
  }
  return out;
}

}  // namespace

AuditReport verify_file_bytes(ByteView bytes) {
  ParsedFile parsed = parse_file(bytes);
  AuditReport structural;
  if (!parsed.blocks.empty() && parsed.difficulty != 0)
    structural = verify_blocks(parsed.blocks, parsed.difficulty);
  if (!parsed.error_height) return structural;

  AuditReport report;
  report.valid = false;
  Height bad = *parsed.error_height;
  if (!structural.valid && structural.first_bad_height) bad = std::min(bad, *structural.first_bad_height);
  report.first_bad_height = bad;
  report.reasons = structural.reasons;
  report.reasons.push_back(parsed.error);
  return report;
}

Chain chain_from_bytes(ByteView bytes) {
  ParsedFile parsed = parse_file(bytes);
  AuditReport audit = verify_file_bytes(bytes);
  if (!audit.valid) {
    std::string why = audit.reasons.empty() ? "invalid chain file" : audit.reasons.front();
    throw Error(ErrorCode::corrupt_file, why).with_height(audit.first_bad_height.value_or(0));
  }
  Chain chain(parsed.difficulty, Chain::Unvalidated{});
  chain.commit(std::move(parsed.blocks.front()));
  for (std::size_t i = 1; i < parsed.blocks.size(); ++i) {
    try {
      chain.append(std::move(parsed.blocks[i]));
    } catch (const Error& e) {
      throw Error(ErrorCode::corrupt_file, e.what()).with_height(i);
    }
  }
  return chain;
}

void persist(const Chain& chain, const std::filesystem::path& path) {
  Bytes bytes = chain_to_bytes(chain);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io_error, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot replace " + path.string() + ": " + ec.message());
}

Chain load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return chain_from_bytes(bytes);
}

}  // namespace authcoin
