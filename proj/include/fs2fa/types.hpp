#pragma once

#include "fs2fa/bytes.hpp"
#include "fs2fa/crypto_core.hpp"
#include "fs2fa/errors.hpp"
#include "fs2fa/rng.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fs2fa {

using Counter = std::uint64_t;

inline constexpr std::size_t kIdBytes = 16;
inline constexpr std::size_t kNonceBytes = 16;
inline constexpr std::size_t kVerifierBytes = 32;
inline constexpr std::size_t kMinVerifierBytes = 4;
inline constexpr std::size_t kMaxTransactionBytes = 1024;
inline constexpr std::size_t kMinPinDigits = 4;
inline constexpr std::size_t kMaxPinDigits = 12;

/// Public 128-bit client identifier.
struct ClientId {
  std::array<std::uint8_t, kIdBytes> bytes{};

  static ClientId generate(Rng& rng) { return {rng.bytes<kIdBytes>()}; }

  static ClientId from_hex(std::string_view hex) {
    auto b = fs2fa::from_hex(hex);
    if (b.size() != kIdBytes) fail(Errc::parse_error, "client id must be 16 bytes");
    ClientId id;
    std::copy(b.begin(), b.end(), id.bytes.begin());
    return id;
  }

  [[nodiscard]] std::string hex() const { return to_hex(bytes); }

  friend auto operator<=>(const ClientId&, const ClientId&) = default;
};

struct NonceTag {};
using Nonce = Secret<kNonceBytes, NonceTag>;

inline Nonce fresh_nonce(Rng& rng) {
  auto b = rng.bytes<kNonceBytes>();
  Nonce n{b};
  sodium_memzero(b.data(), b.size());
  return n;
}

enum class Phase : std::uint8_t { enrolment = 1, authentication = 2 };

constexpr std::string_view to_string(Phase p) {
  return p == Phase::enrolment ? "enrolment" : "authentication";
}

/// Human-readable description of the transaction being authorised. 1..1024 bytes.
class TransactionDesc {
 public:
  TransactionDesc() = default;
  explicit TransactionDesc(std::string text) : text_(std::move(text)) {
    if (text_.empty() || text_.size() > kMaxTransactionBytes) {
      fail(Errc::invalid_argument, "transaction description must be 1..1024 bytes");
    }
  }

  [[nodiscard]] const std::string& text() const noexcept { return text_; }
  [[nodiscard]] ByteView bytes() const noexcept { return as_bytes(text_); }
  [[nodiscard]] bool empty() const noexcept { return text_.empty(); }
  void discard() noexcept { zeroize(text_); }

  friend bool operator==(const TransactionDesc&, const TransactionDesc&) = default;

 private:
  std::string text_;
};

/// PRF of the PIN under the device-only key sa, optionally truncated. The
/// protocol carries 4..32 bytes; shorter values exist only for collision studies.
class Verifier {
 public:
  Verifier() = default;
  explicit Verifier(ByteView bytes) : bytes_(bytes) {
    if (bytes.empty() || bytes.size() > kVerifierBytes) {
      fail(Errc::invalid_argument, "verifier must be 1..32 bytes");
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return bytes_.size(); }
  [[nodiscard]] ByteView expose() const { return bytes_.expose(); }
  [[nodiscard]] bool live() const noexcept { return bytes_.live(); }
  void discard() noexcept { bytes_.discard(); }

  friend bool operator==(const Verifier&, const Verifier&) = default;

 private:
  SecretBytes bytes_;
};

/// A PIN as typed by the client: 4..12 ASCII digits. Never persisted.
class Pin {
 public:
  Pin() = default;

  static Pin parse(std::string_view digits) {
    if (digits.size() < kMinPinDigits || digits.size() > kMaxPinDigits) {
      fail(Errc::invalid_argument, "PIN must have 4..12 digits");
    }
    for (char c : digits) {
      if (c < '0' || c > '9') fail(Errc::invalid_argument, "PIN must be decimal digits");
    }
    Pin p;
    p.digits_ = SecretBytes(as_bytes(digits));
    return p;
  }

  /// The index-th PIN of the `length`-digit universe, zero padded.
  static Pin nth(std::uint64_t index, std::size_t length) {
    std::string s(length, '0');
    for (std::size_t i = length; i-- > 0;) {
      s[i] = static_cast<char>('0' + index % 10);
      index /= 10;
    }
    auto p = parse(s);
    zeroize(s);
    return p;
  }

  [[nodiscard]] ByteView expose() const { return digits_.expose(); }
  [[nodiscard]] std::string str() const {
    auto v = expose();
    return {v.begin(), v.end()};
  }
  [[nodiscard]] std::size_t length() const noexcept { return digits_.size(); }
  [[nodiscard]] bool live() const noexcept { return digits_.live(); }
  void discard() noexcept { digits_.discard(); }

 private:
  SecretBytes digits_;
};

inline std::uint64_t pin_universe_size(std::size_t length) {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < length; ++i) n *= 10;
  return n;
}

}  // namespace fs2fa
