#include "authcoin/sim.hpp"

#include <algorithm>
#include <cmath>

#include "authcoin/error.hpp"

namespace authcoin::sim {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::honest: return "honest";
    case Role::sybil: return "sybil";
    case Role::unreliable_verifier: return "unreliable_verifier";
  }
  return "?";
}

std::string_view to_string(Reachability r) {
  switch (r) {
    case Reachability::alive: return "alive";
    case Reachability::dead: return "dead";
    case Reachability::unknown: return "unknown";
  }
  return "?";
}

std::vector<CertMismatch> monitor_certificates(const std::vector<CertObservation>& observations) {
  std::map<std::pair<std::string, Day>, std::vector<const CertObservation*>> windows;
  for (const auto& o : observations) windows[{o.identifier, o.observed_at}].push_back(&o);

  std::vector<CertMismatch> out;
  for (const auto& [key, group] : windows) {
    std::map<Digest, std::size_t> votes;
    for (const auto* o : group) ++votes[o->observed_key_id];
    if (votes.size() < 2) continue;
    auto majority = std::max_element(votes.begin(), votes.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
    CertMismatch m{key.first, key.second, majority->first, {}};
    for (const auto* o : group)
      if (o->observed_key_id != m.majority_key_id) m.minority_vantages.push_back(o->vantage_id);
    std::sort(m.minority_vantages.begin(), m.minority_vantages.end());
    out.push_back(std::move(m));
  }
  return out;
}

std::set<Digest> suspicion_closure(const Chain& chain, const Digest& exposed_key_id, Day now) {
  if (!chain.key(exposed_key_id))
    throw Error(ErrorCode::unknown_key, "no key " + exposed_key_id.short_hex()).with_subject(exposed_key_id);
  std::set<Digest> out;
  for (const RecordLocation& loc : chain.index().all_signatures) {
    const auto& sig = chain.at_as<SignatureRecord>(loc);
    if (sig.signee_key_id == exposed_key_id && keylife::signature_active(chain, sig, now))
      out.insert(sig.signer_key_id);
  }
  return out;
}

std::map<std::string, Reachability> reachability_report(const Chain& chain, Day now) {
  const ChainIndex& idx = chain.index();
  std::map<Digest, std::string> email_of;
  std::map<std::string, Reachability> out;
  for (const RecordLocation& loc : idx.all_keys) {
    const auto& key = chain.at_as<PublicKeyRecord>(loc);
    if (key.owner.identifier_kind != IdentifierKind::email) continue;
    email_of[key.key_id] = key.owner.identifier;
    out.emplace(key.owner.identifier, Reachability::unknown);
  }

  Day from = now >= keylife::kLookupWindowDays ? now - keylife::kLookupWindowDays : 0;
  std::map<std::string, std::vector<const VaResultRecord*>> attempts;
  for (const RecordLocation& loc : idx.all_results) {
    Day stamped = chain.timestamp_at(loc.height);
    if (stamped < from || stamped > now) continue;
    const auto& r = chain.at_as<VaResultRecord>(loc);
    if (auto it = email_of.find(r.target_key_id); it != email_of.end()) attempts[it->second].push_back(&r);
  }

  for (const auto& [email, list] : attempts) {
    bool any_success = std::any_of(list.begin(), list.end(),
                                   [](const auto* r) { return r->outcome == Outcome::success; });
    auto unanswered = [](const VaResultRecord* r) {
      return r->outcome == Outcome::failure && r->failure_reason == FailureReason::no_response;
    };
    if (any_success)
      out[email] = Reachability::alive;
    else if (list.size() >= 2 && unanswered(list[list.size() - 1]) && unanswered(list[list.size() - 2]))
      out[email] = Reachability::dead;
  }
  return out;
}

std::set<Digest> exposed_keys(const Chain& chain) {
  std::set<Digest> out;
  for (const RecordLocation& loc : chain.index().all_results) {
    const auto& r = chain.at_as<VaResultRecord>(loc);
    if (r.outcome == Outcome::failure && (r.failure_reason == FailureReason::bad_signature ||
                                          r.failure_reason == FailureReason::unsatisfactory))
      out.insert(r.target_key_id);
  }
  return out;
}

Metrics compute_metrics(const Chain& chain, const std::vector<ActorProfile>& actors,
                        const std::vector<CertObservation>& observations) {
  Metrics m;
  const ChainIndex& idx = chain.index();
  Day now = chain.tip_timestamp();

  std::set<Digest> exposed = exposed_keys(chain);
  for (const auto& a : actors) {
    bool flagged = exposed.contains(a.key_id);
    if (a.role == Role::sybil) {
      ++m.sybil_keys;
      if (flagged) ++m.sybils_exposed;
    } else if (flagged) {
      ++m.honest_falsely_flagged;
    }
    if (a.account_state == AccountState::dead) ++m.dead_accounts;
  }
  if (m.sybil_keys > 0) m.sybils_exposed_fraction = static_cast<double>(m.sybils_exposed) / m.sybil_keys;

  std::set<Digest> questioned;
  for (const Digest& k : exposed) {
    auto closure = suspicion_closure(chain, k, now);
    questioned.insert(closure.begin(), closure.end());
  }
  m.questioned_keys = questioned.size();

  for (const RecordLocation& loc : idx.all_signatures) {
    if (chain.at_as<SignatureRecord>(loc).kind == VaKind::validation)
      ++m.validation_signatures;
    else
      ++m.authentication_signatures;
  }

  var::VarStatistics vs = var::var_statistics(chain);
  m.vars_generated = vs.generated;
  m.vars_fulfilled = vs.fulfilled;
  m.vars_failed = vs.failed;
  m.vars_expired = vs.expired;
  m.vars_open = vs.open;

  for (const auto& [email, state] : reachability_report(chain, now))
    if (state == Reachability::dead) ++m.dead_addresses_detected;

  std::vector<Digest> sessions;
  for (const auto& [session_id, locs] : idx.by_session) sessions.push_back(session_id);
  std::sort(sessions.begin(), sessions.end());
  for (const Digest& s : sessions)
    if (!protocol::detect_posting_mismatch(chain, s).divergent_records.empty()) ++m.mismatches_detected;

  m.cert_mismatches = monitor_certificates(observations).size();
  m.blocks = chain.tip_height();
  m.tip_hash = chain.tip().block_hash.hex();
  return m;
}

void ScenarioConfig::check() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::invalid_config, why); };
  if (!(dead_fraction >= 0.0 && dead_fraction <= 1.0)) bad("dead_fraction must be in [0, 1]");
  if (!(unreliable_diligence >= 0.0 && unreliable_diligence <= 1.0)) bad("unreliable_diligence must be in [0, 1]");
  if (sybil_count > 0 && sybil_collectives == 0) bad("sybils need at least one collective");
  if (difficulty == 0 || difficulty > 64) bad("difficulty must be in [1, 64]");
  if (deadline_days == 0) bad("deadline_days must be positive");
  if (honest_count + sybil_count + unreliable_count == 0) bad("scenario has no actors");
  if (cert_domains > honest_count) bad("cert_domains exceeds honest_count");
  if (cert_domains > 0 && vantage_points.empty()) bad("cert_domains needs vantage_points");
  if (intercepted_vantage &&
      std::find(vantage_points.begin(), vantage_points.end(), *intercepted_vantage) == vantage_points.end())
    bad("intercepted_vantage is not one of vantage_points");
  selection.check();
}

World::World(ScenarioConfig config)
    : config_(std::move(config)), rng_(config_.seed), chain_((config_.check(), config_.difficulty), 0) {
  std::size_t total = config_.honest_count + config_.sybil_count + config_.unreliable_count;
  actors_.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    ActorProfile a;
    a.actor_id = i;
    if (i < config_.honest_count) {
      a.role = Role::honest;
    } else if (i < config_.honest_count + config_.sybil_count) {
      a.role = Role::sybil;
      a.collective_id = (i - config_.honest_count) % config_.sybil_collectives;
      a.can_authenticate_as_claimed = false;
      a.verification_diligence = 0.0;
    } else {
      a.role = Role::unreliable_verifier;
      a.verification_diligence = config_.unreliable_diligence;
    }
    a.identity = {"Actor " + std::to_string(i), "actor" + std::to_string(i) + "@example.org", IdentifierKind::email};
    Writer seed;
    seed.u64(config_.seed);
    seed.u64(i);
    a.key = crypto::generate_keypair(crypto::hash(std::move(seed).take()).prefix_u64(), config_.key_bits);
    actors_.push_back(std::move(a));
  }

  // Pick exactly round(dead_fraction * honest_count) dead honest accounts.
  auto dead = static_cast<std::size_t>(std::llround(config_.dead_fraction * config_.honest_count));
  std::vector<std::size_t> order(config_.honest_count);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < dead; ++i) {
    std::size_t j = i + uniform_below(rng_, order.size() - i);
    std::swap(order[i], order[j]);
    actors_[order[i]].account_state = AccountState::dead;
  }

  for (auto& a : actors_) {
    PublicKeyRecord rec = make_key_record(a.identity, a.key.public_only(), 1);
    a.key_id = rec.key_id;
    owner_[a.key_id] = a.actor_id;
    pending_.emplace_back(std::move(rec));
  }
}

bool World::willing(const ActorProfile& actor, const ActorProfile& target) const {
  if (actor.account_state == AccountState::dead) return false;
  if (actor.role == Role::sybil) return target.role == Role::sybil && target.collective_id == actor.collective_id;
  return true;
}

protocol::Verdict World::verdict_of(const ActorProfile& verifier, const ActorProfile& target, VaKind kind) {
  using protocol::Verdict;
  if (kind == VaKind::validation) return Verdict::accept;
  switch (verifier.role) {
    case Role::honest: break;
    case Role::sybil: return Verdict::accept;
    case Role::unreliable_verifier:
      if (!bernoulli(rng_, verifier.verification_diligence)) return Verdict::accept;
      break;
  }
  return target.can_authenticate_as_claimed ? Verdict::accept : Verdict::reject;
}

void World::run_session(protocol::VaSession session, std::size_t initiator, std::size_t responder) {
  using protocol::Direction;
  const ActorProfile& a = actors_[initiator];
  const ActorProfile& b = actors_[responder];

  ChallengeRecord fwd = protocol::issue_challenge(chain_, session, Direction::forward, rng_, day_);
  if (b.account_state == AccountState::dead) {
    for (Record& r : protocol::post_session_records(session, protocol::Party::initiator))
      pending_.push_back(std::move(r));
    waiting_.push_back({std::move(session), initiator});
    return;
  }
  auto response = protocol::fulfil_challenge(b.key, fwd, protocol::FulfilOutcome::correct, day_, session.secret());
  protocol::evaluate(chain_, session, Direction::forward, response, a.key, day_, verdict_of(a, b, session.kind));

  if (session.state == protocol::SessionState::forward_done) {
    ChallengeRecord back = protocol::issue_challenge(chain_, session, Direction::backward, rng_, day_);
    auto back_response =
        protocol::fulfil_challenge(a.key, back, protocol::FulfilOutcome::correct, day_, session.secret());
    protocol::evaluate(chain_, session, Direction::backward, back_response, b.key, day_,
                       verdict_of(b, a, session.kind));
  }
  for (protocol::Party p : {protocol::Party::initiator, protocol::Party::responder})
    for (Record& r : protocol::post_session_records(session, p)) pending_.push_back(std::move(r));
}

void World::form_collectives() {
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (const auto& a : actors_)
    if (a.collective_id) members[*a.collective_id].push_back(a.actor_id);
  for (const auto& [id, list] : members) {
    std::size_t n = list.size();
    if (n < 2) continue;
    for (std::size_t i = 0; i < (n == 2 ? 1 : n); ++i) {
      protocol::ChallengeSpec spec;
      spec.kind = VaKind::authentication;
      spec.payload_template.assign({'r', 'i', 'n', 'g'});
      spec.deadline_days = config_.deadline_days;
      auto session = protocol::start_session(chain_, actors_[list[i]].key_id, actors_[list[(i + 1) % n]].key_id,
                                             spec, day_, rng_, config_.min_bits);
      run_session(std::move(session), list[i], list[(i + 1) % n]);
    }
  }
}

void World::resolve_waiting() {
  std::vector<Waiting> still;
  for (auto& w : waiting_) {
    const ChallengeRecord& c = *w.session.records(protocol::Direction::forward).challenge;
    if (day_ <= c.respond_by) {
      still.push_back(std::move(w));
      continue;
    }
    auto ev = protocol::evaluate(chain_, w.session, protocol::Direction::forward, std::nullopt,
                                 actors_[w.verifier].key, day_);
    pending_.emplace_back(ev.result);
  }
  waiting_ = std::move(still);
}

void World::claim_vars() {
  const auto& all = chain_.index().all_vars;
  for (; vars_seen_ < all.size(); ++vars_seen_) {
    const auto& v = chain_.at_as<VaRecord>(all[vars_seen_]);
    const ActorProfile& target = actors_[owner_.at(v.target_key_id)];

    std::vector<std::size_t> order(actors_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < order.size(); ++i) {
      std::size_t j = i + uniform_below(rng_, order.size() - i);
      std::swap(order[i], order[j]);
      const ActorProfile& actor = actors_[order[i]];
      if (!willing(actor, target)) continue;
      if (!var::eligible(v, *chain_.key(actor.key_id), chain_, config_.selection)) continue;
      try {
        auto session = var::fulfil_var(chain_, v.var_id, actor.key_id, config_.selection, day_, rng_,
                                       config_.min_bits, config_.deadline_days);
        run_session(std::move(session), actor.actor_id, target.actor_id);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::formal_validation_failed && e.code() != ErrorCode::var_closed) throw;
      }
      break;
    }
  }
}

void World::step() {
  ++day_;
  if (!pending_.empty()) {
    chain_.mine(std::move(pending_), day_);
    pending_.clear();
    for (VaRecord& v : var::generate_vars(chain_, chain_.tip_height(), config_.selection))
      pending_.emplace_back(std::move(v));
  }
  if (day_ == 1) form_collectives();
  resolve_waiting();
  claim_vars();
}

std::vector<CertObservation> World::cert_observations() const {
  std::vector<CertObservation> out;
  for (std::size_t d = 0; d < config_.cert_domains; ++d) {
    std::string domain = "site" + std::to_string(d) + ".example";
    for (const auto& vantage : config_.vantage_points) {
      Digest seen = actors_[d].key_id;
      if (d == 0 && config_.intercepted_vantage == vantage)
        seen = crypto::hash({as_bytes("authcoin/forged"), as_bytes(domain)});
      out.push_back({vantage, domain, seen, day_});
    }
  }
  return out;
}

Metrics World::metrics() const { return compute_metrics(chain_, actors_, cert_observations()); }

ScenarioResult run_scenario(const ScenarioConfig& config) {
  World world(config);
  world.run(config.blocks_to_run);
  return {world.metrics(), world.chain()};
}

}  // namespace authcoin::sim
