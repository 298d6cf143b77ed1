#pragma once

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fs2fa {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Block32 = std::array<std::uint8_t, 32>;

namespace detail {

inline void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) {
      throw std::runtime_error("libsodium failed to initialise");
    }
    return true;
  }();
  (void)ready;
}

}  // namespace detail

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline void append(Bytes& out, ByteView more) {
  out.insert(out.end(), more.begin(), more.end());
}

inline void append_be16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void append_be64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

inline std::uint16_t read_be16(ByteView in) {
  return static_cast<std::uint16_t>((in[0] << 8) | in[1]);
}

inline std::uint64_t read_be64(ByteView in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    v = (v << 8) | in[i];
  }
  return v;
}

inline std::string to_hex(ByteView in) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(in.size() * 2);
  for (auto b : in) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

inline Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) {
    throw std::invalid_argument("hex string has odd length");
  }
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = nibble(hex[2 * i]);
    const int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw std::invalid_argument("invalid hex digit");
    }
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

/// Constant-time equality for equal-length buffers; unequal lengths compare false.
inline bool equal_ct(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  if (a.empty()) return true;
  return sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

/// Fixed-size secret buffer.
///
/// Storage is wiped on destruction and on discard(). A discarded secret has no
/// readable contents: expose() throws instead of returning wiped bytes. The Tag
/// parameter keeps keys of different roles (AE key, PRF key, generator state)
/// from being mixed up implicitly; rekeying across roles is an explicit cast.
template <std::size_t N, class Tag>
class Secret {
 public:
  static constexpr std::size_t size = N;

  Secret() = default;

  explicit Secret(ByteView bytes) {
    if (bytes.size() != N) {
      throw std::invalid_argument("secret has wrong length");
    }
    std::copy(bytes.begin(), bytes.end(), data_.begin());
    live_ = true;
  }

  explicit Secret(const std::array<std::uint8_t, N>& bytes) : Secret(ByteView(bytes)) {}

  template <class OtherTag>
  explicit Secret(const Secret<N, OtherTag>& other) : Secret(other.expose()) {}

  Secret(const Secret&) = default;
  Secret& operator=(const Secret& other) {
    if (this != &other) {
      wipe();
      data_ = other.data_;
      live_ = other.live_;
    }
    return *this;
  }

  Secret(Secret&& other) noexcept : data_(other.data_), live_(other.live_) { other.wipe(); }
  Secret& operator=(Secret&& other) noexcept {
    if (this != &other) {
      wipe();
      data_ = other.data_;
      live_ = other.live_;
      other.wipe();
    }
    return *this;
  }

  ~Secret() { wipe(); }

  [[nodiscard]] bool live() const noexcept { return live_; }

  [[nodiscard]] ByteView expose() const {
    if (!live_) {
      throw std::logic_error("read of a discarded secret");
    }
    return {data_.data(), N};
  }

  [[nodiscard]] std::array<std::uint8_t, N> copy() const {
    std::array<std::uint8_t, N> out{};
    auto v = expose();
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }

  void discard() noexcept { wipe(); }

  friend bool operator==(const Secret& a, const Secret& b) {
    if (a.live_ != b.live_) return false;
    return !a.live_ || equal_ct(a.expose(), b.expose());
  }

 private:
  void wipe() noexcept {
    sodium_memzero(data_.data(), N);
    live_ = false;
  }

  std::array<std::uint8_t, N> data_{};
  bool live_ = false;
};

/// Variable-length secret buffer with the same discard semantics as Secret.
class SecretBytes {
 public:
  SecretBytes() = default;
  explicit SecretBytes(ByteView bytes) : data_(bytes.begin(), bytes.end()), live_(true) {}

  SecretBytes(const SecretBytes&) = default;
  SecretBytes& operator=(const SecretBytes& other) {
    if (this != &other) {
      wipe();
      data_ = other.data_;
      live_ = other.live_;
    }
    return *this;
  }
  SecretBytes(SecretBytes&& other) noexcept
      : data_(std::move(other.data_)), live_(other.live_) {
    other.data_.clear();
    other.live_ = false;
  }
  SecretBytes& operator=(SecretBytes&& other) noexcept {
    if (this != &other) {
      wipe();
      data_ = std::move(other.data_);
      live_ = other.live_;
      other.data_.clear();
      other.live_ = false;
    }
    return *this;
  }
  ~SecretBytes() { wipe(); }

  [[nodiscard]] bool live() const noexcept { return live_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  [[nodiscard]] ByteView expose() const {
    if (!live_) {
      throw std::logic_error("read of a discarded secret");
    }
    return {data_.data(), data_.size()};
  }

  void discard() noexcept { wipe(); }

  friend bool operator==(const SecretBytes& a, const SecretBytes& b) {
    if (a.live_ != b.live_) return false;
    return !a.live_ || equal_ct(a.expose(), b.expose());
  }

 private:
  void wipe() noexcept {
    if (!data_.empty()) sodium_memzero(data_.data(), data_.size());
    data_.clear();
    live_ = false;
  }

  Bytes data_;
  bool live_ = false;
};

/// Wipes a secret in place. Every later read through expose() throws.
template <class S>
void zeroize(S& secret) noexcept {
  secret.discard();
}

inline void zeroize(Bytes& buf) noexcept {
  if (!buf.empty()) sodium_memzero(buf.data(), buf.size());
  buf.clear();
}

inline void zeroize(std::string& buf) noexcept {
  if (!buf.empty()) sodium_memzero(buf.data(), buf.size());
  buf.clear();
}

}  // namespace fs2fa
