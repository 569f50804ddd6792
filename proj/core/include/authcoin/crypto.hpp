#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string_view>

#include "authcoin/bytes.hpp"

namespace authcoin {

enum class SchemeId : std::uint8_t {
  toy_deterministic = 0,
  standard = 1,
};

std::string_view to_string(SchemeId scheme);

/// A key pair as held by its owner. `private_bytes` is empty for a
/// public-only view and never enters a chain record.
struct KeyMaterial {
  SchemeId scheme = SchemeId::toy_deterministic;
  std::uint32_t key_length_bits = 0;
  Bytes public_bytes;
  Bytes private_bytes;

  bool has_private() const { return !private_bytes.empty(); }
  KeyMaterial public_only() const { return {scheme, key_length_bits, public_bytes, {}}; }
  bool operator==(const KeyMaterial&) const = default;
};

namespace crypto {

/// SHA-256.
Digest hash(ByteView data);
Digest hash(std::initializer_list<ByteView> parts);

/// Asymmetric primitives for one scheme. Implementations are stateless.
class Provider {
 public:
  virtual ~Provider() = default;

  virtual SchemeId scheme() const = 0;
  virtual std::uint32_t min_bits() const = 0;
  virtual std::uint32_t max_bits() const = 0;

  virtual KeyMaterial generate_keypair(std::uint64_t seed, std::uint32_t min_bits) const = 0;
  /// Whether the public half parses as a key of this scheme.
  virtual bool well_formed(const KeyMaterial& key) const = 0;

  virtual Bytes sign(const KeyMaterial& key, ByteView message) const = 0;
  virtual bool verify(const KeyMaterial& key, ByteView message, ByteView signature) const = 0;

  /// `entropy` drives every random choice the scheme makes; equal entropy
  /// gives equal ciphertext where the scheme allows it.
  virtual Bytes encrypt(const KeyMaterial& key, ByteView plaintext, ByteView entropy) const = 0;
  virtual Bytes decrypt(const KeyMaterial& key, ByteView ciphertext) const = 0;
};

/// Fast, fully seed-reproducible scheme: RSA over a 62-bit modulus wrapping
/// an AES-256-GCM body. `key_length_bits` is a declared strength label only.
/// Not secure; meant for tests and simulation.
const Provider& toy_provider();
/// RSA (PKCS#1 v1.5 signatures, OAEP-wrapped AES-256-GCM encryption) via
/// OpenSSL. Seeds are ignored: key generation draws from the system RNG.
const Provider& standard_provider();
const Provider& provider_for(SchemeId scheme);

KeyMaterial generate_keypair(std::uint64_t seed, std::uint32_t min_bits,
                             SchemeId scheme = SchemeId::toy_deterministic);
bool well_formed(const KeyMaterial& key);
Bytes sign(const KeyMaterial& key, ByteView message);
bool verify(const KeyMaterial& key, ByteView message, ByteView signature);
Bytes encrypt(const KeyMaterial& key, ByteView plaintext, ByteView entropy = {});
Bytes decrypt(const KeyMaterial& key, ByteView ciphertext);

/// Symmetric authenticated sealing under a 32-byte secret (AES-256-GCM, the
/// IV derived from `entropy`). Throws DecryptionFailure on a bad tag.
Bytes seal(ByteView secret, ByteView plaintext, ByteView entropy);
Bytes open(ByteView secret, ByteView sealed);

// Keystore: scheme (1) | key_length_bits (4, BE) | public (len-prefixed) | private (len-prefixed).
Bytes encode_keystore(const KeyMaterial& key);
KeyMaterial decode_keystore(ByteView bytes);
void write_keystore(const std::filesystem::path& path, const KeyMaterial& key);
KeyMaterial read_keystore(const std::filesystem::path& path);

}  // namespace crypto
}  // namespace authcoin
