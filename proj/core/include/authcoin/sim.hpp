#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "authcoin/chain.hpp"
#include "authcoin/protocol.hpp"
#include "authcoin/var.hpp"

namespace authcoin::sim {

enum class Role : std::uint8_t { honest, sybil, unreliable_verifier };
enum class AccountState : std::uint8_t { reachable, dead };
std::string_view to_string(Role role);

struct ActorProfile {
  std::size_t actor_id = 0;
  Role role = Role::honest;
  std::optional<std::size_t> collective_id;
  EntityDescriptor identity;
  KeyMaterial key;
  Digest key_id;
  AccountState account_state = AccountState::reachable;
  /// False for sybils: they hold their keys but cannot prove the identity.
  bool can_authenticate_as_claimed = true;
  /// Chance of actually judging authentication evidence; otherwise accept.
  double verification_diligence = 1.0;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::size_t honest_count = 100;
  std::size_t sybil_count = 0;
  std::size_t sybil_collectives = 1;
  std::size_t unreliable_count = 0;
  double unreliable_diligence = 0.5;
  double dead_fraction = 0.0;
  std::size_t blocks_to_run = 50;
  unsigned difficulty = 8;
  var::SelectionParams selection;
  Day deadline_days = protocol::kDefaultDeadlineDays;
  std::uint32_t key_bits = 2048;
  std::uint32_t min_bits = 2048;
  /// Certificate monitoring: each vantage point observes the keys of the
  /// first `cert_domains` honest actors; `intercepted_vantage` sees a
  /// forged key for the first domain.
  std::vector<std::string> vantage_points;
  std::size_t cert_domains = 0;
  std::optional<std::string> intercepted_vantage;

  /// Throws InvalidConfig.
  void check() const;
};

/// Flat `key = value` lines; `#` starts a comment. Unknown keys are errors.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

struct CertObservation {
  std::string vantage_id;
  std::string identifier;
  Digest observed_key_id;
  Day observed_at = 0;
};

struct CertMismatch {
  std::string identifier;
  Day day = 0;
  Digest majority_key_id;
  /// Vantage points that saw something other than the majority key.
  std::vector<std::string> minority_vantages;
};

/// Compares observations of one identifier made on the same day; flags any
/// day where vantage points saw different keys. Ties for the majority go to
/// the smaller key id.
std::vector<CertMismatch> monitor_certificates(const std::vector<CertObservation>& observations);

struct Metrics {
  std::size_t sybil_keys = 0;
  std::size_t sybils_exposed = 0;
  double sybils_exposed_fraction = 0.0;
  std::size_t honest_falsely_flagged = 0;
  std::size_t questioned_keys = 0;
  std::size_t validation_signatures = 0;
  std::size_t authentication_signatures = 0;
  std::size_t vars_generated = 0;
  std::size_t vars_fulfilled = 0;
  std::size_t vars_failed = 0;
  std::size_t vars_expired = 0;
  std::size_t vars_open = 0;
  std::size_t dead_accounts = 0;
  std::size_t dead_addresses_detected = 0;
  std::size_t mismatches_detected = 0;
  std::size_t cert_mismatches = 0;
  Height blocks = 0;
  std::string tip_hash;

  bool operator==(const Metrics&) const = default;
};

/// Machine-readable `key=value` lines, fixed order.
std::string format_metrics(const Metrics& m);
/// Human-readable summary.
std::string format_report(const Metrics& m);

/// Keys holding an active signature over `exposed_key_id`. One hop only.
/// Throws UnknownKey.
std::set<Digest> suspicion_closure(const Chain& chain, const Digest& exposed_key_id, Day now);

enum class Reachability : std::uint8_t { alive, dead, unknown };
std::string_view to_string(Reachability r);

/// Per email identifier, from V&A results stamped within the trailing 365
/// days: alive after any success; dead when the latest two or more attempts
/// all went unanswered; unknown otherwise.
std::map<std::string, Reachability> reachability_report(const Chain& chain, Day now);

/// Keys that failed a challenge with bad_signature or unsatisfactory.
std::set<Digest> exposed_keys(const Chain& chain);

/// Discrete scenario engine: one block per day, one seeded RNG.
class World {
 public:
  explicit World(ScenarioConfig config);

  /// One tick: mine pending records, queue the new block's VARs, resolve
  /// sessions whose deadline passed, then let actors claim open VARs.
  void step();
  void run(std::size_t ticks) {
    for (std::size_t i = 0; i < ticks; ++i) step();
  }

  Day today() const { return day_; }
  const Chain& chain() const { return chain_; }
  const std::vector<ActorProfile>& actors() const { return actors_; }
  const std::vector<Record>& pending() const { return pending_; }
  const ScenarioConfig& config() const { return config_; }
  std::vector<CertObservation> cert_observations() const;
  Metrics metrics() const;

 private:
  struct Waiting {
    protocol::VaSession session;
    std::size_t verifier;
  };

  protocol::Verdict verdict_of(const ActorProfile& verifier, const ActorProfile& target, VaKind kind);
  bool willing(const ActorProfile& actor, const ActorProfile& target) const;
  void run_session(protocol::VaSession session, std::size_t initiator, std::size_t responder);
  void form_collectives();
  void resolve_waiting();
  void claim_vars();

  ScenarioConfig config_;
  Rng rng_;
  Chain chain_;
  Day day_ = 0;
  std::vector<ActorProfile> actors_;
  std::map<Digest, std::size_t> owner_;
  std::vector<Record> pending_;
  std::vector<Waiting> waiting_;
  std::size_t vars_seen_ = 0;
};

Metrics compute_metrics(const Chain& chain, const std::vector<ActorProfile>& actors,
                        const std::vector<CertObservation>& observations);

struct ScenarioResult {
  Metrics metrics;
  Chain chain;
};

ScenarioResult run_scenario(const ScenarioConfig& config);

}  // namespace authcoin::sim
