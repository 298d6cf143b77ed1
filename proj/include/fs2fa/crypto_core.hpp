#pragma once

// Symmetric primitives: a PRF, deterministic authenticated encryption and a
// forward-secure pseudorandom generator with its multi-step wrapper.
//
// PRF       HMAC-SHA256 (RFC 2104 / FIPS 198-1), 32-byte key, 32-byte output.
// FS-PRG    out_i = PRF(st_{i-1}, 0x4F), st_i = PRF(st_{i-1}, 0x53).
// AE        SIV-style composition over the same PRF:
//             tag  = PRF(key, 0x01 || plaintext)
//             ks_j = PRF(key, 0x02 || tag || be32(j))
//             body = plaintext XOR (ks_0 || ks_1 || ...)
//           Decryption recomputes the tag and compares in constant time.

#include "fs2fa/bytes.hpp"
#include "fs2fa/errors.hpp"
#include "fs2fa/rng.hpp"

#include <sodium.h>

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <utility>

namespace fs2fa {

struct PrfKeyTag {};
struct AeKeyTag {};
struct FsprgStateTag {};
struct FsprgOutputTag {};
struct SessionKeyTag {};

using PrfKey = Secret<32, PrfKeyTag>;
using AeKey = Secret<32, AeKeyTag>;
using FsprgOutput = Secret<32, FsprgOutputTag>;
using SessionKey = Secret<32, SessionKeyTag>;

/// Evolving generator state. The epoch counts `next` steps since genesis and
/// only ever increases through the public API.
class FsprgState {
 public:
  FsprgState() = default;
  FsprgState(Secret<32, FsprgStateTag> bytes, std::uint64_t epoch)
      : bytes_(std::move(bytes)), epoch_(epoch) {}

  [[nodiscard]] std::uint64_t epoch() const noexcept { return epoch_; }
  [[nodiscard]] ByteView expose() const { return bytes_.expose(); }
  [[nodiscard]] bool live() const noexcept { return bytes_.live(); }
  void discard() noexcept { bytes_.discard(); }

  friend bool operator==(const FsprgState& a, const FsprgState& b) {
    return a.epoch_ == b.epoch_ && a.bytes_ == b.bytes_;
  }

 private:
  Secret<32, FsprgStateTag> bytes_;
  std::uint64_t epoch_ = 0;
};

struct AeCiphertext {
  Bytes body;
  Block32 tag{};

  friend bool operator==(const AeCiphertext&, const AeCiphertext&) = default;
};

namespace crypto {

inline constexpr std::size_t kKeyBytes = 32;
inline constexpr std::size_t kTagBytes = 32;
inline constexpr std::size_t kMaxInputBytes = std::size_t{1} << 16;
inline constexpr std::uint64_t kMaxUpdateDistance = std::uint64_t{1} << 20;
inline constexpr std::uint64_t kMaxEpoch = std::uint64_t{1} << 63;
inline constexpr std::uint8_t kOutputLabel = 0x4F;
inline constexpr std::uint8_t kStateLabel = 0x53;
inline constexpr std::uint8_t kAeTagLabel = 0x01;
inline constexpr std::uint8_t kAeStreamLabel = 0x02;

/// Per-thread call counters for the cost bench. `verifier` is bumped by the
/// device's verifier derivation, which also shows up under `prf`.
struct OpCounters {
  std::uint64_t prf = 0;
  std::uint64_t ae_encrypt = 0;
  std::uint64_t ae_decrypt = 0;
  std::uint64_t fsprg_next = 0;
  std::uint64_t update = 0;
  std::uint64_t verifier = 0;

  friend OpCounters operator-(const OpCounters& a, const OpCounters& b) {
    return {a.prf - b.prf,           a.ae_encrypt - b.ae_encrypt, a.ae_decrypt - b.ae_decrypt,
            a.fsprg_next - b.fsprg_next, a.update - b.update,     a.verifier - b.verifier};
  }
  friend bool operator==(const OpCounters&, const OpCounters&) = default;
};

inline OpCounters& op_counters() {
  thread_local OpCounters counters;
  return counters;
}

namespace detail {

inline Block32 hmac_sha256(ByteView key, std::initializer_list<ByteView> parts) {
  fs2fa::detail::ensure_sodium();
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  for (auto part : parts) {
    crypto_auth_hmacsha256_update(&st, part.data(), part.size());
  }
  Block32 out{};
  crypto_auth_hmacsha256_final(&st, out.data());
  sodium_memzero(&st, sizeof st);
  return out;
}

inline void xor_keystream(ByteView key, const Block32& tag, ByteView in, Bytes& out) {
  out.resize(in.size());
  const std::uint8_t label[1] = {kAeStreamLabel};
  for (std::size_t off = 0, block = 0; off < in.size(); off += 32, ++block) {
    const std::uint8_t ctr[4] = {static_cast<std::uint8_t>(block >> 24),
                                 static_cast<std::uint8_t>(block >> 16),
                                 static_cast<std::uint8_t>(block >> 8),
                                 static_cast<std::uint8_t>(block)};
    auto ks = hmac_sha256(key, {label, tag, ctr});
    const std::size_t n = std::min<std::size_t>(32, in.size() - off);
    for (std::size_t i = 0; i < n; ++i) {
      out[off + i] = in[off + i] ^ ks[i];
    }
    sodium_memzero(ks.data(), ks.size());
  }
}

inline FsprgOutput raw_output(ByteView state) {
  const std::uint8_t label[1] = {kOutputLabel};
  auto b = hmac_sha256(state, {label});
  FsprgOutput out{b};
  sodium_memzero(b.data(), b.size());
  return out;
}

inline Secret<32, FsprgStateTag> raw_successor(ByteView state) {
  const std::uint8_t label[1] = {kStateLabel};
  auto b = hmac_sha256(state, {label});
  Secret<32, FsprgStateTag> next{b};
  sodium_memzero(b.data(), b.size());
  return next;
}

}  // namespace detail

/// Keyed PRF, HMAC-SHA256. Inputs are limited to 64 KiB.
template <class Tag>
Block32 prf(const Secret<32, Tag>& key, ByteView input) {
  if (input.size() > kMaxInputBytes) {
    fail(Errc::invalid_argument, "prf input exceeds 64 KiB");
  }
  ++op_counters().prf;
  return detail::hmac_sha256(key.expose(), {input});
}

inline AeKey ae_keygen(Rng& rng) {
  auto b = rng.bytes<32>();
  AeKey key{b};
  sodium_memzero(b.data(), b.size());
  return key;
}

inline PrfKey prf_keygen(Rng& rng) {
  auto b = rng.bytes<32>();
  PrfKey key{b};
  sodium_memzero(b.data(), b.size());
  return key;
}

template <class Tag>
AeCiphertext ae_encrypt(const Secret<32, Tag>& key, ByteView plaintext) {
  if (plaintext.empty() || plaintext.size() > kMaxInputBytes) {
    fail(Errc::invalid_argument, "ae_encrypt plaintext must be 1..65536 bytes");
  }
  ++op_counters().ae_encrypt;
  const std::uint8_t label[1] = {kAeTagLabel};
  AeCiphertext ct;
  ct.tag = detail::hmac_sha256(key.expose(), {label, plaintext});
  detail::xor_keystream(key.expose(), ct.tag, plaintext, ct.body);
  return ct;
}

/// Returns the plaintext on accept, nullopt on reject.
template <class Tag>
std::optional<SecretBytes> ae_decrypt(const Secret<32, Tag>& key, const AeCiphertext& ct) {
  ++op_counters().ae_decrypt;
  if (ct.body.empty() || ct.body.size() > kMaxInputBytes) return std::nullopt;
  Bytes plain;
  detail::xor_keystream(key.expose(), ct.tag, ct.body, plain);
  const std::uint8_t label[1] = {kAeTagLabel};
  auto expected = detail::hmac_sha256(key.expose(), {label, plain});
  const bool ok = equal_ct(expected, ct.tag);
  sodium_memzero(expected.data(), expected.size());
  if (!ok) {
    zeroize(plain);
    return std::nullopt;
  }
  SecretBytes out{plain};
  zeroize(plain);
  return out;
}

inline FsprgState fsprg_keygen(Rng& rng) {
  auto b = rng.bytes<32>();
  FsprgState st{Secret<32, FsprgStateTag>{b}, 0};
  sodium_memzero(b.data(), b.size());
  return st;
}

struct FsprgStep {
  FsprgOutput out;
  FsprgState state;
};

/// One generator step. The caller owns the old state and should discard it.
inline FsprgStep fsprg_next(const FsprgState& state) {
  if (state.epoch() >= kMaxEpoch) {
    fail(Errc::invalid_argument, "generator epoch overflow");
  }
  ++op_counters().fsprg_next;
  return {detail::raw_output(state.expose()),
          FsprgState{detail::raw_successor(state.expose()), state.epoch() + 1}};
}

/// d sequential generator steps, returning the d-th output and state.
/// Intermediate states and outputs are wiped as the chain advances.
inline FsprgStep update(const FsprgState& state, std::uint64_t d) {
  if (d == 0 || d > kMaxUpdateDistance) {
    fail(Errc::invalid_argument, "update distance must be in [1, 2^20]");
  }
  if (state.epoch() > kMaxEpoch - d) {
    fail(Errc::invalid_argument, "generator epoch overflow");
  }
  ++op_counters().update;
  FsprgStep step = fsprg_next(state);
  for (std::uint64_t i = 1; i < d; ++i) {
    step = fsprg_next(step.state);
  }
  return step;
}

}  // namespace crypto
}  // namespace fs2fa
