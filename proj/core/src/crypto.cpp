#include "authcoin/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>

#include <array>
#include <fstream>
#include <iterator>
#include <memory>
#include <random>

#include "authcoin/error.hpp"

namespace authcoin {

std::string_view to_string(SchemeId scheme) {
  switch (scheme) {
    case SchemeId::toy_deterministic: return "toy-deterministic";
    case SchemeId::standard: return "standard";
  }
  return "unknown";
}

namespace crypto {

namespace {

struct EvpMdCtxFree {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct EvpCipherCtxFree {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct EvpPkeyFree {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct EvpPkeyCtxFree {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, EvpMdCtxFree>;
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, EvpCipherCtxFree>;
using Pkey = std::unique_ptr<EVP_PKEY, EvpPkeyFree>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, EvpPkeyCtxFree>;

constexpr std::size_t kIvSize = 12;
constexpr std::size_t kTagSize = 16;

Bytes random_bytes(std::size_t n) {
  Bytes out(n);
  if (RAND_bytes(out.data(), static_cast<int>(n)) != 1)
    throw std::runtime_error("RAND_bytes failed");
  return out;
}

Bytes gcm_encrypt(ByteView key, ByteView iv, ByteView plaintext) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  Bytes out(plaintext.size() + kTagSize);
  int len = 0;
  int total = 0;
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), iv.data()) != 1)
    throw std::runtime_error("AES-GCM init failed");
  if (!plaintext.empty()) {
    if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1)
      throw std::runtime_error("AES-GCM update failed");
    total = len;
  }
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + total, &len) != 1)
    throw std::runtime_error("AES-GCM final failed");
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kTagSize),
                          out.data() + plaintext.size()) != 1)
    throw std::runtime_error("AES-GCM tag failed");
  return out;
}

Bytes gcm_decrypt(ByteView key, ByteView iv, ByteView body) {
  if (body.size() < kTagSize) throw Error(ErrorCode::decryption_failure, "ciphertext too short");
  std::size_t n = body.size() - kTagSize;
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  Bytes out(n);
  int len = 0;
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), iv.data()) != 1)
    throw std::runtime_error("AES-GCM init failed");
  if (n > 0 && EVP_DecryptUpdate(ctx.get(), out.data(), &len, body.data(), static_cast<int>(n)) != 1)
    throw Error(ErrorCode::decryption_failure, "ciphertext rejected");
  Bytes tag(body.begin() + static_cast<std::ptrdiff_t>(n), body.end());
  EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kTagSize), tag.data());
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &len) != 1)
    throw Error(ErrorCode::decryption_failure, "authentication tag mismatch");
  return out;
}

// ---------------------------------------------------------------------------
// Toy scheme: textbook RSA on a product of two 31-bit primes.

using u64 = std::uint64_t;
__extension__ using u128 = unsigned __int128;
__extension__ using i128 = __int128;

constexpr u64 kToyExponent = 65537;

u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }

u64 powmod(u64 base, u64 exp, u64 m) {
  u64 result = 1 % m;
  base %= m;
  while (exp) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

// Deterministic Miller-Rabin; these bases are exact for all 64-bit inputs.
bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    u64 x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

u64 mod_inverse(u64 a, u64 m) {
  i128 t = 0, new_t = 1;
  i128 r = m, new_r = a;
  while (new_r != 0) {
    i128 q = r / new_r;
    i128 tmp = t - q * new_t;
    t = new_t;
    new_t = tmp;
    tmp = r - q * new_r;
    r = new_r;
    new_r = tmp;
  }
  if (r != 1) return 0;
  if (t < 0) t += m;
  return static_cast<u64>(t);
}

void put_u64(Bytes& out, u64 v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

u64 get_u64(ByteView in, std::size_t offset) {
  u64 v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = v << 8 | in[offset + i];
  return v;
}

struct ToyPublic {
  u64 n;
  u64 e;
};

class ToyProvider final : public Provider {
 public:
  SchemeId scheme() const override { return SchemeId::toy_deterministic; }
  std::uint32_t min_bits() const override { return 256; }
  std::uint32_t max_bits() const override { return 16384; }

  KeyMaterial generate_keypair(std::uint64_t seed, std::uint32_t requested) const override {
    if (requested > max_bits())
      throw Error(ErrorCode::unsupported_key_size,
                  "toy scheme supports at most " + std::to_string(max_bits()) + " bits");
    std::uint32_t bits = std::max(requested, min_bits());

    Writer w;
    w.str("authcoin/toy-keygen");
    w.u64(seed);
    w.u32(bits);
    std::mt19937_64 rng(hash(w.bytes()).prefix_u64());

    auto draw_prime = [&rng]() {
      for (;;) {
        u64 candidate = (rng() >> 33) | (1ULL << 30) | 1ULL;
        if ((candidate - 1) % kToyExponent != 0 && is_prime(candidate)) return candidate;
      }
    };
    u64 p = draw_prime();
    u64 q = draw_prime();
    while (q == p) q = draw_prime();

    u64 n = p * q;
    u64 d = mod_inverse(kToyExponent, (p - 1) * (q - 1));

    KeyMaterial key;
    key.scheme = SchemeId::toy_deterministic;
    key.key_length_bits = bits;
    put_u64(key.public_bytes, n);
    put_u64(key.public_bytes, kToyExponent);
    put_u64(key.private_bytes, n);
    put_u64(key.private_bytes, d);
    return key;
  }

  bool well_formed(const KeyMaterial& key) const override {
    if (key.scheme != SchemeId::toy_deterministic || key.public_bytes.size() != 16) return false;
    if (key.key_length_bits < min_bits() || key.key_length_bits > max_bits()) return false;
    ToyPublic pub = parse_public(key);
    return pub.n >= (1ULL << 60) && (pub.n & 1) && pub.e > 1 && (pub.e & 1) && pub.e < pub.n;
  }

  Bytes sign(const KeyMaterial& key, ByteView message) const override {
    auto [n, d] = parse_private(key);
    u64 h = hash(message).prefix_u64() % n;
    Bytes sig;
    put_u64(sig, powmod(h, d, n));
    return sig;
  }

  bool verify(const KeyMaterial& key, ByteView message, ByteView signature) const override {
    if (!well_formed(key)) throw Error(ErrorCode::malformed_key, "toy public key malformed");
    if (signature.size() != 8) return false;
    ToyPublic pub = parse_public(key);
    u64 s = get_u64(signature, 0);
    if (s >= pub.n) return false;
    return powmod(s, pub.e, pub.n) == hash(message).prefix_u64() % pub.n;
  }

  Bytes encrypt(const KeyMaterial& key, ByteView plaintext, ByteView entropy) const override {
    if (!well_formed(key)) throw Error(ErrorCode::malformed_key, "toy public key malformed");
    ToyPublic pub = parse_public(key);
    Bytes seed_bytes = entropy.empty() ? random_bytes(32) : Bytes(entropy.begin(), entropy.end());
    u64 k = hash({as_bytes("authcoin/toy-kem"), seed_bytes}).prefix_u64() % (pub.n - 3) + 2;
    u64 c1 = powmod(k, pub.e, pub.n);

    Bytes out;
    put_u64(out, c1);
    Digest body_key = session_key(k, c1);
    std::array<std::uint8_t, kIvSize> iv{};
    Bytes body = gcm_encrypt(body_key.view(), iv, plaintext);
    out.insert(out.end(), body.begin(), body.end());
    return out;
  }

  Bytes decrypt(const KeyMaterial& key, ByteView ciphertext) const override {
    auto [n, d] = parse_private(key);
    if (ciphertext.size() < 8 + kTagSize) throw Error(ErrorCode::decryption_failure, "ciphertext too short");
    u64 c1 = get_u64(ciphertext, 0);
    if (c1 >= n) throw Error(ErrorCode::decryption_failure, "ciphertext not under this key");
    u64 k = powmod(c1, d, n);
    Digest body_key = session_key(k, c1);
    std::array<std::uint8_t, kIvSize> iv{};
    return gcm_decrypt(body_key.view(), iv, ciphertext.subspan(8));
  }

 private:
  static ToyPublic parse_public(const KeyMaterial& key) {
    return {get_u64(key.public_bytes, 0), get_u64(key.public_bytes, 8)};
  }

  static std::pair<u64, u64> parse_private(const KeyMaterial& key) {
    if (key.scheme != SchemeId::toy_deterministic || key.private_bytes.size() != 16)
      throw Error(ErrorCode::malformed_key, "toy private key missing or malformed");
    u64 n = get_u64(key.private_bytes, 0);
    if (n < 4) throw Error(ErrorCode::malformed_key, "toy modulus too small");
    return {n, get_u64(key.private_bytes, 8)};
  }

  static Digest session_key(u64 k, u64 c1) {
    Bytes material;
    put_u64(material, k);
    put_u64(material, c1);
    return hash({as_bytes("authcoin/toy-dem"), material});
  }
};

// ---------------------------------------------------------------------------
// Standard scheme: RSA through OpenSSL.

Pkey parse_rsa_public(const KeyMaterial& key) {
  const unsigned char* p = key.public_bytes.data();
  Pkey pkey(d2i_PUBKEY(nullptr, &p, static_cast<long>(key.public_bytes.size())));
  if (!pkey || EVP_PKEY_get_base_id(pkey.get()) != EVP_PKEY_RSA ||
      p != key.public_bytes.data() + key.public_bytes.size())
    return nullptr;
  return pkey;
}

Pkey parse_rsa_private(const KeyMaterial& key) {
  if (key.private_bytes.empty()) throw Error(ErrorCode::malformed_key, "private key missing");
  const unsigned char* p = key.private_bytes.data();
  Pkey pkey(d2i_AutoPrivateKey(nullptr, &p, static_cast<long>(key.private_bytes.size())));
  if (!pkey || EVP_PKEY_get_base_id(pkey.get()) != EVP_PKEY_RSA)
    throw Error(ErrorCode::malformed_key, "RSA private key does not parse");
  return pkey;
}

class StandardProvider final : public Provider {
 public:
  SchemeId scheme() const override { return SchemeId::standard; }
  std::uint32_t min_bits() const override { return 1024; }
  std::uint32_t max_bits() const override { return 8192; }

  KeyMaterial generate_keypair(std::uint64_t /*seed*/, std::uint32_t requested) const override {
    if (requested > max_bits())
      throw Error(ErrorCode::unsupported_key_size,
                  "standard scheme supports at most " + std::to_string(max_bits()) + " bits");
    std::uint32_t bits = std::max(requested, min_bits());
    bits = (bits + 7) / 8 * 8;

    PkeyCtx ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_RSA, nullptr));
    EVP_PKEY* raw = nullptr;
    if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1 ||
        EVP_PKEY_CTX_set_rsa_keygen_bits(ctx.get(), static_cast<int>(bits)) != 1 ||
        EVP_PKEY_keygen(ctx.get(), &raw) != 1)
      throw std::runtime_error("RSA key generation failed");
    Pkey pkey(raw);

    KeyMaterial key;
    key.scheme = SchemeId::standard;
    key.key_length_bits = static_cast<std::uint32_t>(EVP_PKEY_get_bits(pkey.get()));
    key.public_bytes = der(pkey.get(), i2d_PUBKEY);
    key.private_bytes = der(pkey.get(), i2d_PrivateKey);
    return key;
  }

  bool well_formed(const KeyMaterial& key) const override {
    if (key.scheme != SchemeId::standard) return false;
    Pkey pkey = parse_rsa_public(key);
    return pkey && static_cast<std::uint32_t>(EVP_PKEY_get_bits(pkey.get())) == key.key_length_bits;
  }

  Bytes sign(const KeyMaterial& key, ByteView message) const override {
    Pkey pkey = parse_rsa_private(key);
    MdCtx ctx(EVP_MD_CTX_new());
    std::size_t len = 0;
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, EVP_sha256(), nullptr, pkey.get()) != 1 ||
        EVP_DigestSign(ctx.get(), nullptr, &len, message.data(), message.size()) != 1)
      throw std::runtime_error("RSA sign init failed");
    Bytes sig(len);
    if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1)
      throw std::runtime_error("RSA sign failed");
    sig.resize(len);
    return sig;
  }

  bool verify(const KeyMaterial& key, ByteView message, ByteView signature) const override {
    Pkey pkey = parse_rsa_public(key);
    if (!pkey) throw Error(ErrorCode::malformed_key, "RSA public key does not parse");
    MdCtx ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr, pkey.get()) != 1)
      throw std::runtime_error("RSA verify init failed");
    return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                            message.size()) == 1;
  }

  Bytes encrypt(const KeyMaterial& key, ByteView plaintext, ByteView /*entropy*/) const override {
    Pkey pkey = parse_rsa_public(key);
    if (!pkey) throw Error(ErrorCode::malformed_key, "RSA public key does not parse");
    Bytes body_key = random_bytes(32);

    PkeyCtx ctx(EVP_PKEY_CTX_new(pkey.get(), nullptr));
    std::size_t len = 0;
    if (!ctx || EVP_PKEY_encrypt_init(ctx.get()) != 1 ||
        EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING) != 1 ||
        EVP_PKEY_CTX_set_rsa_oaep_md(ctx.get(), EVP_sha256()) != 1 ||
        EVP_PKEY_encrypt(ctx.get(), nullptr, &len, body_key.data(), body_key.size()) != 1)
      throw std::runtime_error("RSA-OAEP init failed");
    Bytes wrapped(len);
    if (EVP_PKEY_encrypt(ctx.get(), wrapped.data(), &len, body_key.data(), body_key.size()) != 1)
      throw std::runtime_error("RSA-OAEP encrypt failed");
    wrapped.resize(len);

    Writer w;
    w.blob(wrapped);
    w.raw(seal(body_key, plaintext, random_bytes(16)));
    return std::move(w).take();
  }

  Bytes decrypt(const KeyMaterial& key, ByteView ciphertext) const override {
    Pkey pkey = parse_rsa_private(key);
    Bytes wrapped;
    std::size_t consumed = 0;
    try {
      Reader r(ciphertext);
      wrapped = r.blob();
      consumed = r.offset();
    } catch (const Error&) {
      throw Error(ErrorCode::decryption_failure, "ciphertext truncated");
    }

    PkeyCtx ctx(EVP_PKEY_CTX_new(pkey.get(), nullptr));
    std::size_t len = 0;
    if (!ctx || EVP_PKEY_decrypt_init(ctx.get()) != 1 ||
        EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING) != 1 ||
        EVP_PKEY_CTX_set_rsa_oaep_md(ctx.get(), EVP_sha256()) != 1 ||
        EVP_PKEY_decrypt(ctx.get(), nullptr, &len, wrapped.data(), wrapped.size()) != 1)
      throw Error(ErrorCode::decryption_failure, "RSA-OAEP rejected ciphertext");
    Bytes body_key(len);
    if (EVP_PKEY_decrypt(ctx.get(), body_key.data(), &len, wrapped.data(), wrapped.size()) != 1)
      throw Error(ErrorCode::decryption_failure, "RSA-OAEP rejected ciphertext");
    body_key.resize(len);
    if (body_key.size() != 32) throw Error(ErrorCode::decryption_failure, "unexpected key size");
    return open(body_key, ciphertext.subspan(consumed));
  }

 private:
  template <typename Encoder>
  static Bytes der(EVP_PKEY* pkey, Encoder encode) {
    int len = encode(pkey, nullptr);
    if (len <= 0) throw std::runtime_error("DER encoding failed");
    Bytes out(static_cast<std::size_t>(len));
    unsigned char* p = out.data();
    encode(pkey, &p);
    return out;
  }
};

}  // namespace

Digest hash(ByteView data) { return hash({data}); }

Digest hash(std::initializer_list<ByteView> parts) {
  thread_local MdCtx ctx(EVP_MD_CTX_new());
  Digest d;
  unsigned int len = 0;
  if (EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 init failed");
  for (ByteView part : parts) EVP_DigestUpdate(ctx.get(), part.data(), part.size());
  EVP_DigestFinal_ex(ctx.get(), d.bytes.data(), &len);
  return d;
}

const Provider& toy_provider() {
  static const ToyProvider provider;
  return provider;
}

const Provider& standard_provider() {
  static const StandardProvider provider;
  return provider;
}

const Provider& provider_for(SchemeId scheme) {
  switch (scheme) {
    case SchemeId::toy_deterministic: return toy_provider();
    case SchemeId::standard: return standard_provider();
  }
  throw Error(ErrorCode::malformed_key, "unknown scheme id");
}

KeyMaterial generate_keypair(std::uint64_t seed, std::uint32_t min_bits, SchemeId scheme) {
  return provider_for(scheme).generate_keypair(seed, min_bits);
}

bool well_formed(const KeyMaterial& key) {
  if (key.public_bytes.empty() || key.key_length_bits == 0) return false;
  if (key.scheme != SchemeId::toy_deterministic && key.scheme != SchemeId::standard) return false;
  return provider_for(key.scheme).well_formed(key);
}

Bytes sign(const KeyMaterial& key, ByteView message) {
  return provider_for(key.scheme).sign(key, message);
}

bool verify(const KeyMaterial& key, ByteView message, ByteView signature) {
  return provider_for(key.scheme).verify(key, message, signature);
}

Bytes encrypt(const KeyMaterial& key, ByteView plaintext, ByteView entropy) {
  return provider_for(key.scheme).encrypt(key, plaintext, entropy);
}

Bytes decrypt(const KeyMaterial& key, ByteView ciphertext) {
  return provider_for(key.scheme).decrypt(key, ciphertext);
}

Bytes seal(ByteView secret, ByteView plaintext, ByteView entropy) {
  if (secret.size() != 32) throw Error(ErrorCode::malformed_key, "seal secret must be 32 bytes");
  Digest iv_source = hash({as_bytes("authcoin/seal-iv"), entropy});
  ByteView iv = iv_source.view().first(kIvSize);
  Bytes out(iv.begin(), iv.end());
  Bytes body = gcm_encrypt(secret, iv, plaintext);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Bytes open(ByteView secret, ByteView sealed) {
  if (secret.size() != 32) throw Error(ErrorCode::malformed_key, "seal secret must be 32 bytes");
  if (sealed.size() < kIvSize + kTagSize) throw Error(ErrorCode::decryption_failure, "sealed box too short");
  return gcm_decrypt(secret, sealed.first(kIvSize), sealed.subspan(kIvSize));
}

Bytes encode_keystore(const KeyMaterial& key) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(key.scheme));
  w.u32(key.key_length_bits);
  w.blob(key.public_bytes);
  w.blob(key.private_bytes);
  return std::move(w).take();
}

KeyMaterial decode_keystore(ByteView bytes) {
  Reader r(bytes);
  KeyMaterial key;
  std::uint8_t scheme = r.u8();
  if (scheme > static_cast<std::uint8_t>(SchemeId::standard))
    throw Error(ErrorCode::parse, "unknown scheme id in keystore");
  key.scheme = static_cast<SchemeId>(scheme);
  key.key_length_bits = r.u32();
  key.public_bytes = r.blob();
  key.private_bytes = r.blob();
  if (!r.done()) throw Error(ErrorCode::parse, "trailing bytes in keystore");
  return key;
}

void write_keystore(const std::filesystem::path& path, const KeyMaterial& key) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  Bytes bytes = encode_keystore(key);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io_error, "short write to " + path.string());
}

KeyMaterial read_keystore(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_keystore(bytes);
}

}  // namespace crypto
}  // namespace authcoin
