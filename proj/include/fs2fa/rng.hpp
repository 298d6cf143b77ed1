#pragma once

#include "fs2fa/bytes.hpp"

#include <sodium.h>

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace fs2fa {

/// Randomness source for key generation, nonces and simulation choices.
class Rng {
 public:
  virtual ~Rng() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  template <std::size_t N>
  std::array<std::uint8_t, N> bytes() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }

  std::uint64_t next_u64() {
    auto b = bytes<8>();
    return read_be64(b);
  }

  /// Uniform in [0, bound), rejection sampled.
  std::uint64_t uniform(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform: zero bound");
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    for (;;) {
      const auto x = next_u64();
      if (x < limit) return x % bound;
    }
  }

  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return unit() < p; }
};

/// Operating-system CSPRNG.
class SystemRng final : public Rng {
 public:
  SystemRng() { detail::ensure_sodium(); }
  void fill(std::span<std::uint8_t> out) override { randombytes_buf(out.data(), out.size()); }
};

/// Reproducible ChaCha20 stream keyed by SHA-256 of a 64-bit seed. Used by
/// simulations, tests and the demo CLI when a seed is configured.
class SeededRng final : public Rng {
 public:
  explicit SeededRng(std::uint64_t seed) {
    detail::ensure_sodium();
    Bytes material{'f', 's', '2', 'f', 'a', '-', 's', 'e', 'e', 'd'};
    append_be64(material, seed);
    crypto_hash_sha256(key_.data(), material.data(), material.size());
  }

  ~SeededRng() override { sodium_memzero(key_.data(), key_.size()); }

  void fill(std::span<std::uint8_t> out) override {
    std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce{};
    Bytes n;
    append_be64(n, counter_++);
    std::copy(n.begin(), n.end(), nonce.begin());
    crypto_stream_chacha20(out.data(), out.size(), nonce.data(), key_.data());
  }

 private:
  std::array<std::uint8_t, crypto_stream_chacha20_KEYBYTES> key_{};
  std::uint64_t counter_ = 0;
};

}  // namespace fs2fa
