#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "authcoin/error.hpp"
#include "authcoin/sim.hpp"

namespace authcoin::sim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::invalid_config, "bad value '" + std::string(value) + "' for " + std::string(key));
}

template <typename T>
T parse_uint(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  std::string copy(value);
  std::istringstream in(copy);
  in.imbue(std::locale::classic());
  double out = 0;
  in >> out;
  if (!in || !in.eof()) bad_value(key, value);
  return out;
}

std::vector<std::string> parse_list(std::string_view value) {
  std::vector<std::string> out;
  while (!value.empty()) {
    auto comma = value.find(',');
    auto item = trim(value.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

std::string fixed(double v) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::fixed << std::setprecision(6) << v;
  return out.str();
}

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::invalid_config, "line " + std::to_string(line_no) + ": expected key = value");
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));

    if (key == "seed") c.seed = parse_uint<std::uint64_t>(key, value);
    else if (key == "honest_count") c.honest_count = parse_uint<std::size_t>(key, value);
    else if (key == "sybil_count") c.sybil_count = parse_uint<std::size_t>(key, value);
    else if (key == "sybil_collectives") c.sybil_collectives = parse_uint<std::size_t>(key, value);
    else if (key == "unreliable_count") c.unreliable_count = parse_uint<std::size_t>(key, value);
    else if (key == "unreliable_diligence") c.unreliable_diligence = parse_double(key, value);
    else if (key == "dead_fraction") c.dead_fraction = parse_double(key, value);
    else if (key == "blocks_to_run") c.blocks_to_run = parse_uint<std::size_t>(key, value);
    else if (key == "difficulty") c.difficulty = parse_uint<unsigned>(key, value);
    else if (key == "prefix_bits") c.selection.prefix_bits = parse_uint<unsigned>(key, value);
    else if (key == "prefix_pattern") c.selection.prefix_pattern = parse_uint<std::uint32_t>(key, value);
    else if (key == "var_rate") c.selection.var_rate = parse_double(key, value);
    else if (key == "deadline_days") c.deadline_days = parse_uint<Day>(key, value);
    else if (key == "key_bits") c.key_bits = parse_uint<std::uint32_t>(key, value);
    else if (key == "min_bits") c.min_bits = parse_uint<std::uint32_t>(key, value);
    else if (key == "vantage_points") c.vantage_points = parse_list(value);
    else if (key == "cert_domains") c.cert_domains = parse_uint<std::size_t>(key, value);
    else if (key == "intercepted_vantage") c.intercepted_vantage = std::string(value);
    else throw Error(ErrorCode::invalid_config, "unknown key '" + std::string(key) + "'");
  }
  c.check();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string format_metrics(const Metrics& m) {
  std::ostringstream out;
  out << "sybil_keys=" << m.sybil_keys << '\n'
      << "sybils_exposed=" << m.sybils_exposed << '\n'
      << "sybils_exposed_fraction=" << fixed(m.sybils_exposed_fraction) << '\n'
      << "honest_falsely_flagged=" << m.honest_falsely_flagged << '\n'
      << "questioned_keys=" << m.questioned_keys << '\n'
      << "signatures_validation=" << m.validation_signatures << '\n'
      << "signatures_authentication=" << m.authentication_signatures << '\n'
      << "vars_generated=" << m.vars_generated << '\n'
      << "vars_fulfilled=" << m.vars_fulfilled << '\n'
      << "vars_failed=" << m.vars_failed << '\n'
      << "vars_expired=" << m.vars_expired << '\n'
      << "vars_open=" << m.vars_open << '\n'
      << "dead_accounts=" << m.dead_accounts << '\n'
      << "dead_addresses_detected=" << m.dead_addresses_detected << '\n'
      << "mismatches_detected=" << m.mismatches_detected << '\n'
      << "cert_mismatches=" << m.cert_mismatches << '\n'
      << "blocks=" << m.blocks << '\n'
      << "tip_hash=" << m.tip_hash << '\n';
  return out.str();
}

std::string format_report(const Metrics& m) {
  std::ostringstream out;
  out << "Scenario after " << m.blocks << " blocks (tip " << m.tip_hash.substr(0, 16) << ")\n"
      << "  sybils exposed:          " << m.sybils_exposed << " of " << m.sybil_keys << " ("
      << fixed(m.sybils_exposed_fraction) << ")\n"
      << "  honest falsely flagged:  " << m.honest_falsely_flagged << '\n'
      << "  questioned keys:         " << m.questioned_keys << '\n'
      << "  signatures:              " << m.validation_signatures << " validation, "
      << m.authentication_signatures << " authentication\n"
      << "  VARs:                    " << m.vars_generated << " generated, " << m.vars_fulfilled << " fulfilled, "
      << m.vars_failed << " failed, " << m.vars_expired << " expired, " << m.vars_open << " open\n"
      << "  dead addresses detected: " << m.dead_addresses_detected << " of " << m.dead_accounts << '\n'
      << "  posting mismatches:      " << m.mismatches_detected << '\n'
      << "  certificate mismatches:  " << m.cert_mismatches << '\n';
  return out.str();
}

}  // namespace authcoin::sim
