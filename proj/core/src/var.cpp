#include "authcoin/var.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "authcoin/error.hpp"

namespace authcoin::var {

void SelectionParams::check() const {
  if (prefix_bits < 1 || prefix_bits > 16) throw Error(ErrorCode::invalid_config, "prefix_bits must be in [1, 16]");
  if (prefix_pattern >> prefix_bits) throw Error(ErrorCode::invalid_config, "prefix_pattern wider than prefix_bits");
  if (!(var_rate > 0.0 && var_rate <= 1.0)) throw Error(ErrorCode::invalid_config, "var_rate must be in (0, 1]");
}

std::vector<Digest> valid_keys_at(const Chain& chain, Height height) {
  const ChainIndex& idx = chain.index();
  Day stamp = chain.timestamp_at(height);
  std::vector<Digest> out;
  for (const RecordLocation& loc : idx.all_keys) {
    if (loc.height > height) break;
    const auto& key = chain.at_as<PublicKeyRecord>(loc);
    if (stamp >= key.expires_at) continue;
    bool revoked = false;
    if (auto it = idx.revocations_of.find(key.key_id); it != idx.revocations_of.end())
      revoked = std::any_of(it->second.begin(), it->second.end(),
                            [&](const RecordLocation& r) { return r.height <= height; });
    if (!revoked) out.push_back(key.key_id);
  }
  return out;
}

std::vector<VaRecord> generate_vars(const Chain& chain, Height height, const SelectionParams& params) {
  params.check();
  std::vector<Digest> keys = valid_keys_at(chain, height);
  if (keys.empty()) return {};

  // The small epsilon keeps products such as 0.05 * 100 from rounding up.
  auto wanted = static_cast<std::size_t>(std::ceil(params.var_rate * static_cast<double>(keys.size()) - 1e-9));
  std::size_t m = std::min(std::max<std::size_t>(wanted, 1), keys.size());

  Rng rng = rng_from(chain.blocks()[height].block_hash);
  std::vector<VaRecord> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, keys.size() - i));
    std::swap(keys[i], keys[j]);
    VaRecord v;
    v.target_key_id = keys[i];
    v.kind = static_cast<VarKind>(uniform_below(rng, 3));
    v.created_at_block = height;
    v.status = VarStatus::open;
    out.push_back(finalize(std::move(v)));
  }
  return out;
}

bool prefix_matches(const VaRecord& var, const PublicKeyRecord& key, const SelectionParams& params) {
  Bytes var_bytes = canonical_serialize(Record(var));
  Bytes key_bytes = canonical_serialize(Record(key));
  return crypto::hash({var_bytes, key_bytes}).prefix_bits(params.prefix_bits) == params.prefix_pattern;
}

bool eligible(const VaRecord& var, const PublicKeyRecord& verifier_key, const Chain& chain,
              const SelectionParams& params) {
  if (verifier_key.key_id == var.target_key_id) return false;
  auto loc = chain.key_location(verifier_key.key_id);
  if (!loc || loc->height >= var.created_at_block) return false;
  if (keylife::key_status(chain, verifier_key.key_id, chain.tip_timestamp()) != keylife::KeyStatus::valid)
    return false;
  return prefix_matches(var, verifier_key, params);
}

VarStatus var_status(const Chain& chain, const Digest& var_id) {
  const ChainIndex& idx = chain.index();
  const VaRecord* v = chain.var(var_id);
  if (!v) throw Error(ErrorCode::var_closed, "unknown VAR " + var_id.short_hex()).with_subject(var_id);

  auto claim = idx.var_challenges.find(var_id);
  if (claim == idx.var_challenges.end() || claim->second.empty()) {
    return chain.tip_height() - v->created_at_block > kVarExpiryBlocks ? VarStatus::expired : VarStatus::open;
  }
  const auto& first = chain.at_as<ChallengeRecord>(claim->second.front());
  std::size_t successes = 0;
  for (const RecordLocation& loc : idx.by_session.at(first.session_id)) {
    const auto* r = std::get_if<VaResultRecord>(&chain.at(loc));
    if (!r) continue;
    if (r->outcome == Outcome::failure) return VarStatus::failed;
    ++successes;
  }
  return successes >= 2 ? VarStatus::fulfilled : VarStatus::open;
}

VaKind session_kind(VarKind kind) {
  return kind == VarKind::validation ? VaKind::validation : VaKind::authentication;
}

protocol::VaSession fulfil_var(const Chain& chain, const Digest& var_id, const Digest& verifier_key_id,
                               const SelectionParams& params, Day now, Rng& rng, std::uint32_t min_bits,
                               Day deadline_days) {
  const VaRecord* v = chain.var(var_id);
  if (!v || var_status(chain, var_id) != VarStatus::open || chain.index().var_challenges.contains(var_id))
    throw Error(ErrorCode::var_closed, "VAR " + var_id.short_hex() + " is not open for claiming").with_subject(var_id);
  const PublicKeyRecord* verifier = chain.key(verifier_key_id);
  if (!verifier || !eligible(*v, *verifier, chain, params))
    throw Error(ErrorCode::not_eligible, "key " + verifier_key_id.short_hex() + " may not fulfil this VAR")
        .with_subject(verifier_key_id);

  protocol::ChallengeSpec spec;
  spec.kind = session_kind(v->kind);
  spec.visibility = Visibility::open;
  spec.locality = protocol::Locality::global_with_info;
  spec.payload_template.assign(var_id.bytes.begin(), var_id.bytes.end());
  spec.deadline_days = deadline_days;
  return protocol::start_session(chain, verifier_key_id, v->target_key_id, spec, now, rng, min_bits, var_id);
}

VarStatistics var_statistics(const Chain& chain) {
  VarStatistics stats;
  const ChainIndex& idx = chain.index();
  for (const RecordLocation& loc : idx.all_vars) {
    ++stats.generated;
    switch (var_status(chain, chain.at_as<VaRecord>(loc).var_id)) {
      case VarStatus::open: ++stats.open; break;
      case VarStatus::fulfilled: ++stats.fulfilled; break;
      case VarStatus::failed: ++stats.failed; break;
      case VarStatus::expired: ++stats.expired; break;
    }
  }
  for (const RecordLocation& loc : idx.all_results) ++stats.per_key_frequency[chain.at_as<VaResultRecord>(loc).target_key_id];
  return stats;
}

std::vector<Digest> audit_vars(const Chain& chain, const SelectionParams& params) {
  std::map<Height, std::set<Digest>> expected;
  std::vector<Digest> bad;
  for (const RecordLocation& loc : chain.index().all_vars) {
    const auto& v = chain.at_as<VaRecord>(loc);
    auto [it, fresh] = expected.try_emplace(v.created_at_block);
    if (fresh)
      for (const VaRecord& g : generate_vars(chain, v.created_at_block, params)) it->second.insert(g.var_id);
    if (!it->second.contains(v.var_id)) bad.push_back(v.var_id);
  }
  return bad;
}

}  // namespace authcoin::var
