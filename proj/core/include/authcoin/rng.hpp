#pragma once

#include <cstdint>
#include <random>

#include "authcoin/bytes.hpp"

namespace authcoin {

/// std::mt19937_64's output sequence is fixed by the standard; the
/// std distributions are not, so the helpers below are used instead
/// wherever results must be reproducible across toolchains.
using Rng = std::mt19937_64;

inline Rng rng_from(const Digest& d) { return Rng(d.prefix_u64()); }

/// Uniform integer in [0, n). n > 0. Rejection sampling, no modulo bias.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    std::uint64_t x = rng();
    if (x < limit) return x % n;
  }
}

/// Uniform double in [0, 1) with 53 bits of precision.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline bool bernoulli(Rng& rng, double p) { return uniform_unit(rng) < p; }

inline Bytes random_bytes(Rng& rng, std::size_t n) {
  Bytes out(n);
  for (std::size_t i = 0; i < n; i += 8) {
    std::uint64_t x = rng();
    for (std::size_t j = 0; j < 8 && i + j < n; ++j) out[i + j] = static_cast<std::uint8_t>(x >> (8 * j));
  }
  return out;
}

}  // namespace authcoin
