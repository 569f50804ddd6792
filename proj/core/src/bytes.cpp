#include "authcoin/bytes.hpp"

#include <bit>

#include "authcoin/error.hpp"

namespace authcoin {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(ErrorCode::parse, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::parse, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

std::string Digest::hex() const { return to_hex(view()); }

Digest Digest::from_hex(std::string_view hex) {
  if (hex.size() != 64) throw Error(ErrorCode::parse, "digest hex must be 64 characters");
  Bytes raw = authcoin::from_hex(hex);
  Digest d;
  std::copy(raw.begin(), raw.end(), d.bytes.begin());
  return d;
}

bool Digest::is_zero() const {
  for (auto b : bytes)
    if (b != 0) return false;
  return true;
}

unsigned Digest::leading_zero_bits() const {
  unsigned n = 0;
  for (auto b : bytes) {
    if (b == 0) {
      n += 8;
      continue;
    }
    return n + static_cast<unsigned>(std::countl_zero(b));
  }
  return n;
}

std::uint32_t Digest::prefix_bits(unsigned n) const {
  std::uint32_t first = static_cast<std::uint32_t>(bytes[0]) << 24 |
                        static_cast<std::uint32_t>(bytes[1]) << 16 |
                        static_cast<std::uint32_t>(bytes[2]) << 8 | bytes[3];
  if (n == 0) return 0;
  return first >> (32 - n);
}

std::uint64_t Digest::prefix_u64() const {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | bytes[i];
  return v;
}

void Writer::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void Writer::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void Writer::blob(ByteView b) {
  u32(static_cast<std::uint32_t>(b.size()));
  raw(b);
}

void Reader::need(std::size_t n) const {
  if (remaining() < n)
    throw Error(ErrorCode::parse, "truncated input at offset " + std::to_string(pos_));
}

std::uint8_t Reader::u8() {
  need(1);
  return in_[pos_++];
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = v << 8 | in_[pos_++];
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | in_[pos_++];
  return v;
}

Digest Reader::digest() {
  need(32);
  Digest d;
  std::copy_n(in_.begin() + static_cast<std::ptrdiff_t>(pos_), 32, d.bytes.begin());
  pos_ += 32;
  return d;
}

Bytes Reader::raw(std::size_t n) {
  need(n);
  Bytes out(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
            in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return out;
}

Bytes Reader::blob() { return raw(u32()); }

std::string Reader::str() {
  Bytes b = blob();
  return std::string(b.begin(), b.end());
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return "ParseError";
    case ErrorCode::invariant_violation: return "InvariantViolation";
    case ErrorCode::unsupported_key_size: return "UnsupportedKeySize";
    case ErrorCode::malformed_key: return "MalformedKey";
    case ErrorCode::decryption_failure: return "DecryptionFailure";
    case ErrorCode::invalid_record: return "InvalidRecord";
    case ErrorCode::empty_pending: return "EmptyPending";
    case ErrorCode::invalid_block: return "InvalidBlock";
    case ErrorCode::broken_link: return "BrokenLink";
    case ErrorCode::insufficient_work: return "InsufficientWork";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::corrupt_file: return "CorruptFile";
    case ErrorCode::not_authorized: return "NotAuthorized";
    case ErrorCode::unknown_key: return "UnknownKey";
    case ErrorCode::unknown_signature: return "UnknownSignature";
    case ErrorCode::formal_validation_failed: return "FormalValidationFailed";
    case ErrorCode::self_verification: return "SelfVerification";
    case ErrorCode::unsupported_combination: return "UnsupportedCombination";
    case ErrorCode::wrong_state: return "WrongState";
    case ErrorCode::not_eligible: return "NotEligible";
    case ErrorCode::var_closed: return "VarClosed";
    case ErrorCode::invalid_config: return "InvalidConfig";
  }
  return "Error";
}

}  // namespace authcoin
