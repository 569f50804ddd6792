#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "authcoin/chain.hpp"
#include "authcoin/error.hpp"
#include "authcoin/keylife.hpp"
#include "authcoin/protocol.hpp"
#include "authcoin/sim.hpp"
#include "authcoin/var.hpp"

namespace authcoin::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string chain;
  std::string keystore;
  std::string peer_keystore;
  std::uint64_t seed = 0;
  std::string config;
  Day now = 0;
  unsigned difficulty = kDefaultDifficulty;
  std::uint32_t min_bits = keylife::kDefaultMinBits;
  unsigned prefix_bits = 1;
  std::uint32_t prefix_pattern = 0;
  double var_rate = 0.05;

  std::uint32_t bits = 2048;
  std::string scheme = "toy";
  std::string email;
  std::string domain;
  std::string name;
  Day lifetime = kMaxLifetimeDays;

  std::string key_id;
  std::string signature_id;
  std::string var_id;
  std::string session_id;
  std::string verdict = "accept";
  std::string outcome = "correct";
  std::string locality = "global_with_info";
  std::string template_text = "challenge";
  std::string withhold;
  bool opaque = false;
  Day deadline = protocol::kDefaultDeadlineDays;

  std::string metrics;
  std::string observations;
};

// ---------------------------------------------------------------------------
// Files next to the chain.

fs::path pending_path(const std::string& chain) { return chain + ".pending"; }
fs::path registration_path(const std::string& keystore) { return keystore + ".reg"; }

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, ByteView bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io_error, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_text(const fs::path& path, const std::string& text) { write_file(path, as_bytes(text)); }

std::vector<Record> read_pending(const std::string& chain) {
  fs::path path = pending_path(chain);
  if (!fs::exists(path)) return {};
  Bytes bytes = read_file(path);
  Reader r(bytes);
  std::vector<Record> out(r.u32());
  for (Record& rec : out) rec = deserialize(r.blob());
  if (!r.done()) throw Error(ErrorCode::corrupt_file, "trailing bytes in pending pool");
  return out;
}

void write_pending(const std::string& chain, const std::vector<Record>& records) {
  Writer w;
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const Record& rec : records) w.blob(canonical_serialize(rec));
  write_file(pending_path(chain), w.bytes());
}

void queue(const std::string& chain, const std::vector<Record>& records) {
  auto pending = read_pending(chain);
  pending.insert(pending.end(), records.begin(), records.end());
  write_pending(chain, pending);
}

Chain open_chain(const Options& o) {
  if (fs::exists(o.chain)) return load(o.chain);
  return Chain(o.difficulty, 0);
}

Chain existing_chain(const Options& o) {
  if (!fs::exists(o.chain)) throw Error(ErrorCode::io_error, "no chain file " + o.chain);
  return load(o.chain);
}

var::SelectionParams selection(const Options& o) {
  var::SelectionParams p;
  p.prefix_bits = o.prefix_bits;
  p.prefix_pattern = o.prefix_pattern;
  p.var_rate = o.var_rate;
  p.check();
  return p;
}

Digest parse_digest(const std::string& hex, const char* what) {
  try {
    return Digest::from_hex(hex);
  } catch (const Error&) {
    throw Error(ErrorCode::parse, std::string("bad ") + what + " '" + hex + "'");
  }
}

struct Held {
  KeyMaterial key;
  Digest key_id;
};

Held held_key(const Chain& chain, const std::string& keystore) {
  KeyMaterial key = crypto::read_keystore(keystore);
  const PublicKeyRecord* rec = keylife::find_registration(chain, key);
  if (!rec) throw Error(ErrorCode::unknown_key, "key in " + keystore + " is not registered on the chain");
  return {std::move(key), rec->key_id};
}

std::string describe(const VaResultRecord& r) {
  if (r.outcome == Outcome::success) return "success";
  return "failure (" + std::string(to_string(*r.failure_reason)) + ")";
}

std::string summary(const Record& record) {
  std::ostringstream s;
  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, PublicKeyRecord>) {
          s << r.owner.display_name << " <" << r.owner.identifier << "> " << r.key_length_bits << " bits";
        } else if constexpr (std::is_same_v<R, ChallengeRecord>) {
          s << to_string(r.kind) << ' ' << to_string(r.visibility) << ' ' << r.challenger_key_id.short_hex()
            << " -> " << r.target_key_id.short_hex() << " due " << r.respond_by;
        } else if constexpr (std::is_same_v<R, ResponseRecord>) {
          s << "from " << r.responder_key_id.short_hex() << " to " << r.challenge_id.short_hex();
        } else if constexpr (std::is_same_v<R, VaResultRecord>) {
          s << describe(r) << ' ' << r.verifier_key_id.short_hex() << " -> " << r.target_key_id.short_hex();
        } else if constexpr (std::is_same_v<R, SignatureRecord>) {
          s << to_string(r.kind) << ' ' << r.signer_key_id.short_hex() << " -> " << r.signee_key_id.short_hex()
            << " until " << r.expires_at;
        } else if constexpr (std::is_same_v<R, RevocationRecord>) {
          s << to_string(r.kind) << ' ' << r.target_id.short_hex();
        } else {
          s << to_string(r.kind) << " on " << r.target_key_id.short_hex() << " from block " << r.created_at_block;
        }
      },
      record);
  return s.str();
}

// ---------------------------------------------------------------------------
// Session plumbing shared by validate, authenticate and var fulfil.

protocol::FulfilOutcome parse_outcome(const std::string& s) {
  if (s == "correct") return protocol::FulfilOutcome::correct;
  if (s == "wrong") return protocol::FulfilOutcome::wrong;
  return protocol::FulfilOutcome::none;
}

protocol::Verdict parse_verdict(const std::string& s) {
  return s == "reject" ? protocol::Verdict::reject : protocol::Verdict::accept;
}

protocol::Locality parse_locality(const std::string& s) {
  if (s == "local_with_info") return protocol::Locality::local_with_info;
  if (s == "global_no_info") return protocol::Locality::global_no_info;
  return protocol::Locality::global_with_info;
}

/// Runs both directions: the responder answers per `outcome`, the initiator
/// always correctly; both verifiers apply `verdict`. An unanswered challenge
/// is judged the day after its deadline.
void drive_session(const Chain& chain, protocol::VaSession& s, const Held& a, const Held& b, const Options& o,
                   Rng& rng, std::ostream& out) {
  using namespace protocol;
  auto run = [&](Direction d, const Held& verifier, const Held& target, FulfilOutcome outcome) {
    ChallengeRecord c = issue_challenge(chain, s, d, rng, o.now);
    auto response = fulfil_challenge(target.key, c, outcome, o.now, s.secret());
    Day judged = response ? o.now : c.respond_by + 1;
    Evaluation ev = evaluate(chain, s, d, response, verifier.key, judged, parse_verdict(o.verdict));
    out << to_string(d) << ": " << describe(ev.result) << '\n';
    if (ev.signature) out << "signature " << ev.signature->signature_id.hex() << '\n';
  };
  run(Direction::forward, a, b, parse_outcome(o.outcome));
  if (s.state == SessionState::forward_done) run(Direction::backward, b, a, FulfilOutcome::correct);

  std::vector<Record> posted;
  for (Party p : {Party::initiator, Party::responder}) {
    if ((p == Party::initiator && o.withhold == "initiator") || (p == Party::responder && o.withhold == "responder"))
      continue;
    auto mine = post_session_records(s, p);
    posted.insert(posted.end(), mine.begin(), mine.end());
  }
  queue(o.chain, posted);
  out << "queued " << posted.size() << " records\n";
}

int run_session_verb(const Options& o, VaKind kind, std::ostream& out) {
  Chain chain = existing_chain(o);
  Held a = held_key(chain, o.keystore);
  Held b = held_key(chain, o.peer_keystore);
  protocol::ChallengeSpec spec;
  spec.kind = kind;
  spec.visibility = o.opaque ? Visibility::opaque : Visibility::open;
  spec.locality = parse_locality(o.locality);
  spec.payload_template.assign(o.template_text.begin(), o.template_text.end());
  spec.deadline_days = o.deadline;
  Rng rng(o.seed);
  auto s = protocol::start_session(chain, a.key_id, b.key_id, spec, o.now, rng, o.min_bits);
  out << "session " << s.session_id.hex() << '\n';
  drive_session(chain, s, a, b, o, rng, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Verbs.

int do_keygen(const Options& o, std::ostream& out) {
  SchemeId scheme = o.scheme == "standard" ? SchemeId::standard : SchemeId::toy_deterministic;
  KeyMaterial key = crypto::generate_keypair(o.seed, o.bits, scheme);
  EntityDescriptor owner;
  owner.display_name = o.name;
  if (!o.domain.empty()) {
    owner.identifier = o.domain;
    owner.identifier_kind = IdentifierKind::domain;
  } else {
    owner.identifier = o.email;
    owner.identifier_kind = IdentifierKind::email;
  }
  PublicKeyRecord rec = make_key_record(owner, key.public_only(), o.now, o.lifetime);
  check_invariants(Record(rec));
  crypto::write_keystore(o.keystore, key);
  write_file(registration_path(o.keystore), canonical_serialize(Record(rec)));
  out << rec.key_id.hex() << '\n';
  return kExitOk;
}

int do_register(const Options& o, std::ostream& out) {
  Record rec = deserialize(read_file(registration_path(o.keystore)));
  check_invariants(rec);
  queue(o.chain, {rec});
  out << "queued key " << std::get<PublicKeyRecord>(rec).key_id.hex() << '\n';
  return kExitOk;
}

int do_mine(const Options& o, std::ostream& out) {
  Chain chain = open_chain(o);
  auto params = selection(o);
  auto pending = read_pending(o.chain);
  std::size_t n = pending.size();
  const Block& b = chain.mine(std::move(pending), o.now);
  out << "block " << b.height << ' ' << b.block_hash.hex() << " records " << n << '\n';
  auto vars = var::generate_vars(chain, chain.tip_height(), params);
  persist(chain, o.chain);
  std::vector<Record> next(vars.begin(), vars.end());
  write_pending(o.chain, next);
  out << "queued " << vars.size() << " VARs\n";
  return kExitOk;
}

int do_verify(const Options& o, std::ostream& out) {
  AuditReport report = verify_file_bytes(read_file(o.chain));
  if (report.valid) {
    out << "valid\n";
    return kExitOk;
  }
  out << "invalid: first bad height " << *report.first_bad_height << '\n';
  for (const auto& reason : report.reasons) out << "  " << reason << '\n';
  return kExitDomain;
}

int do_revoke_key(const Options& o, std::ostream& out) {
  Chain chain = existing_chain(o);
  Held h = held_key(chain, o.keystore);
  RevocationRecord r = keylife::revoke_key(chain, h.key_id, h.key, o.now);
  queue(o.chain, {r});
  out << "queued revocation " << r.revocation_id.hex() << '\n';
  return kExitOk;
}

int do_revoke_sig(const Options& o, std::ostream& out) {
  Chain chain = existing_chain(o);
  KeyMaterial key = crypto::read_keystore(o.keystore);
  RevocationRecord r = keylife::revoke_signature(chain, parse_digest(o.signature_id, "signature id"), key, o.now);
  queue(o.chain, {r});
  out << "queued revocation " << r.revocation_id.hex() << '\n';
  return kExitOk;
}

int do_lookup(const Options& o, std::ostream& out) {
  Chain chain = open_chain(o);
  keylife::LookupQuery q;
  if (!o.email.empty()) q.email = o.email;
  if (!o.name.empty()) q.name = o.name;
  if (!o.key_id.empty()) q.key_id = parse_digest(o.key_id, "key id");
  auto hits = keylife::lookup_key(chain, q, o.now);
  out << "found " << hits.size() << " keys\n";
  for (const auto& h : hits)
    out << h.record->key_id.hex() << ' ' << keylife::to_string(h.status) << " block " << h.location.height << ' '
        << summary(Record(*h.record)) << '\n';
  return kExitOk;
}

int do_history(const Options& o, std::ostream& out) {
  Chain chain = open_chain(o);
  auto refs = keylife::history(chain, parse_digest(o.key_id, "key id"));
  out << refs.size() << " records\n";
  for (const auto& ref : refs)
    out << ref.location.height << '.' << ref.location.position << ' ' << to_string(tag_of(*ref.record)) << ' '
        << record_id(*ref.record).short_hex() << ' ' << summary(*ref.record) << '\n';
  return kExitOk;
}

int do_status(const Options& o, std::ostream& out) {
  Chain chain = open_chain(o);
  Digest id = parse_digest(o.key_id, "key id");
  out << "status " << keylife::to_string(keylife::key_status(chain, id, o.now)) << '\n';
  auto check = keylife::formal_validate(chain, id, o.now, o.min_bits);
  auto yes = [](bool b) { return b ? "pass" : "fail"; };
  out << "well_formed " << yes(check.well_formed) << '\n'
      << "length_sufficient " << yes(check.length_sufficient) << '\n'
      << "not_expired " << yes(check.not_expired) << '\n'
      << "not_revoked " << yes(check.not_revoked) << '\n';
  return kExitOk;
}

int do_var_list(const Options& o, std::ostream& out) {
  Chain chain = open_chain(o);
  for (const RecordLocation& loc : chain.index().all_vars) {
    const auto& v = chain.at_as<VaRecord>(loc);
    out << v.var_id.hex() << ' ' << to_string(v.kind) << " target " << v.target_key_id.short_hex() << " block "
        << v.created_at_block << ' ' << to_string(var::var_status(chain, v.var_id)) << '\n';
  }
  auto stats = var::var_statistics(chain);
  out << "generated " << stats.generated << " open " << stats.open << " fulfilled " << stats.fulfilled << " failed "
      << stats.failed << " expired " << stats.expired << '\n';
  return kExitOk;
}

int do_var_fulfil(const Options& o, std::ostream& out) {
  Chain chain = existing_chain(o);
  Held verifier = held_key(chain, o.keystore);
  Held target = held_key(chain, o.peer_keystore);
  Digest var_id = parse_digest(o.var_id, "VAR id");
  const VaRecord* v = chain.var(var_id);
  if (v && v->target_key_id != target.key_id)
    throw Error(ErrorCode::not_authorized, "peer keystore does not hold the VAR target's key");
  Rng rng(o.seed);
  auto s = var::fulfil_var(chain, var_id, verifier.key_id, selection(o), o.now, rng, o.min_bits, o.deadline);
  out << "session " << s.session_id.hex() << '\n';
  drive_session(chain, s, verifier, target, o, rng, out);
  return kExitOk;
}

int do_sim_run(const Options& o, std::ostream& out) {
  sim::ScenarioConfig config = sim::load_config(o.config);
  auto result = sim::run_scenario(config);
  if (!o.chain.empty()) persist(result.chain, o.chain);
  if (!o.metrics.empty()) write_text(o.metrics, sim::format_metrics(result.metrics));
  out << sim::format_report(result.metrics);
  return kExitOk;
}

int do_reach_report(const Options& o, std::ostream& out) {
  Chain chain = open_chain(o);
  for (const auto& [email, state] : sim::reachability_report(chain, o.now))
    out << email << ' ' << sim::to_string(state) << '\n';
  return kExitOk;
}

int do_cert_monitor(const Options& o, std::ostream& out) {
  std::ifstream in(o.observations);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + o.observations);
  std::vector<sim::CertObservation> obs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    sim::CertObservation ob;
    std::string key_hex;
    if (!(fields >> ob.vantage_id)) continue;
    if (!(fields >> ob.identifier >> key_hex >> ob.observed_at))
      throw Error(ErrorCode::parse, "observation line " + std::to_string(line_no) + " needs 4 fields");
    ob.observed_key_id = parse_digest(key_hex, "key id");
    obs.push_back(std::move(ob));
  }
  auto flagged = sim::monitor_certificates(obs);
  out << flagged.size() << " mismatches\n";
  for (const auto& m : flagged) {
    out << m.identifier << " day " << m.day << " majority " << m.majority_key_id.short_hex() << " minority";
    for (const auto& v : m.minority_vantages) out << ' ' << v;
    out << '\n';
  }
  return kExitOk;
}

int do_suspects(const Options& o, std::ostream& out) {
  Chain chain = open_chain(o);
  auto closure = sim::suspicion_closure(chain, parse_digest(o.key_id, "key id"), o.now);
  out << closure.size() << " questioned keys\n";
  for (const Digest& k : closure) out << k.hex() << '\n';
  return kExitOk;
}

int do_mismatch(const Options& o, std::ostream& out) {
  Chain chain = open_chain(o);
  auto report = protocol::detect_posting_mismatch(chain, parse_digest(o.session_id, "session id"));
  out << (report.consistent ? "consistent" : "inconsistent") << '\n';
  for (const auto& m : report.missing_sides)
    out << "missing " << to_string(m.tag) << " copy from " << m.missing_party.short_hex() << " for challenge "
        << m.challenge_id.short_hex() << '\n';
  for (const auto& d : report.divergent_records) out << "divergent " << d.record_id.short_hex() << ": " << d.reason << '\n';
  return report.consistent ? kExitOk : kExitDomain;
}

// ---------------------------------------------------------------------------
// Command table.

struct Verb {
  CLI::App* app;
  std::function<int(const Options&, std::ostream&)> run;
};

struct Cli {
  CLI::App app{"Authcoin: blockchain-backed key validation and authentication", "authcoin"};
  Options o;
  std::vector<std::pair<std::string, Verb>> verbs;

  Cli() {
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every command");

    auto chain_opt = [&](CLI::App* sub, bool required = true) {
      auto* opt = sub->add_option("--chain", o.chain, "Chain file");
      if (required) opt->required();
    };
    auto now_opt = [&](CLI::App* sub) { sub->add_option("--now", o.now, "Current logical day"); };
    auto selection_opts = [&](CLI::App* sub) {
      sub->add_option("--prefix-bits", o.prefix_bits, "VAR eligibility prefix length")->check(CLI::Range(1, 16));
      sub->add_option("--prefix-pattern", o.prefix_pattern, "VAR eligibility prefix value");
      sub->add_option("--var-rate", o.var_rate, "VARs per valid key per block")->check(CLI::Range(0.0, 1.0));
    };
    auto session_opts = [&](CLI::App* sub) {
      chain_opt(sub);
      now_opt(sub);
      sub->add_option("--keystore", o.keystore, "Initiator keystore")->required();
      sub->add_option("--peer-keystore", o.peer_keystore, "Responder keystore")->required();
      sub->add_option("--seed", o.seed, "Session randomness seed");
      sub->add_option("--min-bits", o.min_bits, "Minimum key length");
      sub->add_option("--outcome", o.outcome, "How the responder answers")
          ->check(CLI::IsMember({"correct", "wrong", "none"}));
      sub->add_option("--template", o.template_text, "Challenge task text");
      sub->add_option("--deadline", o.deadline, "Days allowed for a response")->check(CLI::PositiveNumber);
      sub->add_option("--withhold", o.withhold, "Party that does not post its copies")
          ->check(CLI::IsMember({"initiator", "responder"}));
    };
    auto add = [&](const std::string& path, CLI::App* sub, std::function<int(const Options&, std::ostream&)> fn) {
      verbs.push_back({path, {sub, std::move(fn)}});
    };

    auto* keygen = app.add_subcommand("keygen", "Generate a key pair and its registration record");
    keygen->add_option("--seed", o.seed, "Key generation seed");
    keygen->add_option("--bits", o.bits, "Key length in bits");
    keygen->add_option("--scheme", o.scheme, "toy or standard")->check(CLI::IsMember({"toy", "standard"}));
    auto* email = keygen->add_option("--email", o.email, "Owner email");
    keygen->add_option("--domain", o.domain, "Owner domain")->excludes(email);
    keygen->add_option("--name", o.name, "Owner display name")->required();
    keygen->add_option("--keystore", o.keystore, "Keystore file to write")->required();
    keygen->add_option("--lifetime", o.lifetime, "Key lifetime in days")->check(CLI::Range(1, 365));
    now_opt(keygen);
    add("keygen", keygen, do_keygen);

    auto* reg = app.add_subcommand("register", "Queue a key registration");
    chain_opt(reg);
    reg->add_option("--keystore", o.keystore, "Keystore written by keygen")->required();
    add("register", reg, do_register);

    auto* validate = app.add_subcommand("validate", "Run a bidirectional validation session");
    session_opts(validate);
    validate->add_flag("--opaque", o.opaque, "Keep the challenge private");
    validate->add_option("--locality", o.locality, "Meeting situation")
        ->check(CLI::IsMember({"local_with_info", "global_with_info", "global_no_info"}));
    add("validate", validate, [](const Options& o, std::ostream& out) {
      return run_session_verb(o, VaKind::validation, out);
    });

    auto* authn = app.add_subcommand("authenticate", "Run a bidirectional authentication session");
    session_opts(authn);
    authn->add_flag("--opaque", o.opaque, "Keep the challenge private");
    authn->add_option("--locality", o.locality, "Meeting situation")
        ->check(CLI::IsMember({"local_with_info", "global_with_info", "global_no_info"}));
    authn->add_option("--verdict", o.verdict, "Verifier judgement of the evidence")
        ->check(CLI::IsMember({"accept", "reject"}));
    add("authenticate", authn, [](const Options& o, std::ostream& out) {
      return run_session_verb(o, VaKind::authentication, out);
    });

    auto* revoke_key = app.add_subcommand("revoke-key", "Queue a self-signed key revocation");
    chain_opt(revoke_key);
    now_opt(revoke_key);
    revoke_key->add_option("--keystore", o.keystore, "Keystore of the key to revoke")->required();
    add("revoke-key", revoke_key, do_revoke_key);

    auto* revoke_sig = app.add_subcommand("revoke-sig", "Queue a signature revocation by its signer");
    chain_opt(revoke_sig);
    now_opt(revoke_sig);
    revoke_sig->add_option("--keystore", o.keystore, "Signer keystore")->required();
    revoke_sig->add_option("--signature", o.signature_id, "Signature id")->required();
    add("revoke-sig", revoke_sig, do_revoke_sig);

    auto* lookup = app.add_subcommand("lookup", "Find registered keys");
    chain_opt(lookup);
    now_opt(lookup);
    lookup->add_option("--email", o.email, "Owner email");
    lookup->add_option("--name", o.name, "Owner display name");
    lookup->add_option("--key-id", o.key_id, "Key id");
    lookup->add_option("--difficulty", o.difficulty, "Difficulty of a new chain");
    add("lookup", lookup, do_lookup);

    auto* history = app.add_subcommand("history", "List the records involving a key");
    chain_opt(history);
    history->add_option("--key-id", o.key_id, "Key id")->required();
    add("history", history, do_history);

    auto* status = app.add_subcommand("status", "Key status and formal validation");
    chain_opt(status);
    now_opt(status);
    status->add_option("--key-id", o.key_id, "Key id")->required();
    status->add_option("--min-bits", o.min_bits, "Minimum key length");
    add("status", status, do_status);

    auto* mine = app.add_subcommand("mine", "Mine the pending pool into a block and queue its VARs");
    chain_opt(mine);
    now_opt(mine);
    mine->add_option("--difficulty", o.difficulty, "Difficulty of a new chain")->check(CLI::Range(1, 64));
    selection_opts(mine);
    add("mine", mine, do_mine);

    auto* chain = app.add_subcommand("chain", "Chain maintenance");
    chain->require_subcommand(1);
    auto* verify = chain->add_subcommand("verify", "Audit a chain file");
    chain_opt(verify);
    add("chain verify", verify, do_verify);

    auto* var = app.add_subcommand("var", "Validation and authentication requests");
    var->require_subcommand(1);
    auto* var_list = var->add_subcommand("list", "List VARs with their status");
    chain_opt(var_list);
    add("var list", var_list, do_var_list);
    auto* var_fulfil = var->add_subcommand("fulfil", "Claim a VAR by running its session");
    session_opts(var_fulfil);
    var_fulfil->add_option("--var", o.var_id, "VAR id")->required();
    var_fulfil->add_option("--verdict", o.verdict, "Verifier judgement of the evidence")
        ->check(CLI::IsMember({"accept", "reject"}));
    selection_opts(var_fulfil);
    add("var fulfil", var_fulfil, do_var_fulfil);

    auto* sim = app.add_subcommand("sim", "Scenario simulation");
    sim->require_subcommand(1);
    auto* sim_run = sim->add_subcommand("run", "Run a scenario from a config file");
    sim_run->add_option("--config", o.config, "Scenario config")->required();
    chain_opt(sim_run, false);
    sim_run->add_option("--metrics", o.metrics, "Metrics output file");
    add("sim run", sim_run, do_sim_run);

    auto* reach = app.add_subcommand("reach-report", "Reachability of email identifiers");
    chain_opt(reach);
    now_opt(reach);
    add("reach-report", reach, do_reach_report);

    auto* cert = app.add_subcommand("cert-monitor", "Compare certificate observations across vantage points");
    cert->add_option("--observations", o.observations, "Lines of: vantage identifier key_id day")->required();
    add("cert-monitor", cert, do_cert_monitor);

    auto* suspects = app.add_subcommand("suspects", "Keys holding active signatures over an exposed key");
    chain_opt(suspects);
    now_opt(suspects);
    suspects->add_option("--key-id", o.key_id, "Exposed key id")->required();
    add("suspects", suspects, do_suspects);

    auto* mismatch = app.add_subcommand("mismatch", "Cross-check the two parties' posts of a session");
    chain_opt(mismatch);
    mismatch->add_option("--session", o.session_id, "Session id")->required();
    add("mismatch", mismatch, do_mismatch);
  }
};

}  // namespace

std::vector<std::string> verbs() {
  Cli cli;
  std::vector<std::string> out;
  for (const auto& [path, verb] : cli.verbs) out.push_back(path);
  return out;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Cli cli;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    cli.app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return cli.app.exit(e, out, err);
    err << "usage error: " << e.what() << '\n' << cli.app.help();
    return kExitUsage;
  }

  for (const auto& [path, verb] : cli.verbs) {
    if (!verb.app->parsed()) continue;
    try {
      return verb.run(cli.o, out);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitDomain;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitDomain;
    }
  }
  err << cli.app.help();
  return kExitUsage;
}

}  // namespace authcoin::cli
