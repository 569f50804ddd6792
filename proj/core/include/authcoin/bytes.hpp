#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace authcoin {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Logical time: whole days since the scenario epoch.
using Day = std::uint32_t;
using Height = std::uint64_t;

inline constexpr Day kMaxLifetimeDays = 365;

/// Fixed 32-byte digest. Ordered and hashable so it can key maps directly.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Digest&) const = default;
  bool operator==(const Digest&) const = default;

  ByteView view() const { return {bytes.data(), bytes.size()}; }
  std::string hex() const;
  std::string short_hex() const { return hex().substr(0, 16); }
  static Digest from_hex(std::string_view hex);

  bool is_zero() const;
  /// Number of leading zero bits (0..256).
  unsigned leading_zero_bits() const;
  /// The first `n` bits as an integer, most significant first. n <= 32.
  std::uint32_t prefix_bits(unsigned n) const;
  /// First eight bytes, big-endian.
  std::uint64_t prefix_u64() const;
};

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);
inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Big-endian writer for canonical encodings.
class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void digest(const Digest& d) { raw(d.view()); }
  /// 4-byte big-endian length followed by the bytes.
  void blob(ByteView b);
  void str(std::string_view s) { blob(as_bytes(s)); }

  const Bytes& bytes() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

/// Bounds-checked big-endian reader. Throws Error{ErrorCode::parse} on underrun.
class Reader {
 public:
  explicit Reader(ByteView in) : in_(in) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  Digest digest();
  Bytes raw(std::size_t n);
  Bytes blob();
  std::string str();

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const;

  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace authcoin

template <>
struct std::hash<authcoin::Digest> {
  std::size_t operator()(const authcoin::Digest& d) const noexcept {
    return static_cast<std::size_t>(d.prefix_u64());
  }
};
