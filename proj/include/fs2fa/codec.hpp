#pragma once

// Bit-exact plaintext layouts and the wire envelope. See docs/wire.md.
//
// Envelope: version(1)=0x01 | msg_type(1) | client_id(16) | payload(rest)
// All integers big-endian.

#include "fs2fa/bytes.hpp"
#include "fs2fa/crypto_core.hpp"
#include "fs2fa/errors.hpp"
#include "fs2fa/types.hpp"

#include <sodium.h>

#include <string>
#include <string_view>
#include <utility>

namespace fs2fa {

enum class MsgType : std::uint8_t {
  hello_enrol = 0x01,
  hello_auth = 0x02,
  enrol_challenge = 0x03,
  enrol_response = 0x04,
  auth_challenge = 0x05,
  auth_response = 0x06,
};

constexpr std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::hello_enrol: return "HELLO_ENROL";
    case MsgType::hello_auth: return "HELLO_AUTH";
    case MsgType::enrol_challenge: return "ENROL_CHALLENGE";
    case MsgType::enrol_response: return "ENROL_RESPONSE";
    case MsgType::auth_challenge: return "AUTH_CHALLENGE";
    case MsgType::auth_response: return "AUTH_RESPONSE";
  }
  return "UNKNOWN";
}

struct WireMessage {
  std::uint8_t version = 0x01;
  MsgType type = MsgType::hello_enrol;
  ClientId client_id;
  Bytes payload;

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

namespace codec {

inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderBytes = 1 + 1 + kIdBytes;
inline constexpr std::size_t kCounterBytes = 8;
inline constexpr std::size_t kEnrolChallengePlainBytes = kNonceBytes + kCounterBytes;
inline constexpr std::uint8_t kResponseDomain = 0x01;
inline constexpr std::uint8_t kSessionKeyDomain = 0x02;

// ---------------------------------------------------------------------------
// Plaintexts

inline Bytes encode_enrol_challenge_plain(const Nonce& n, Counter ct) {
  Bytes out;
  out.reserve(kEnrolChallengePlainBytes);
  append(out, n.expose());
  append_be64(out, ct);
  return out;
}

inline std::pair<Nonce, Counter> parse_enrol_challenge_plain(ByteView p) {
  if (p.size() != kEnrolChallengePlainBytes) {
    fail(Errc::parse_error, "enrolment challenge plaintext must be 24 bytes");
  }
  return {Nonce{p.first(kNonceBytes)}, read_be64(p.subspan(kNonceBytes))};
}

inline Bytes encode_enrol_response_plain(const Nonce& n, const Verifier& v) {
  Bytes out;
  out.reserve(kNonceBytes + v.size());
  append(out, n.expose());
  append(out, v.expose());
  return out;
}

inline std::pair<Nonce, Verifier> parse_enrol_response_plain(ByteView p) {
  if (p.size() < kNonceBytes + kMinVerifierBytes || p.size() > kNonceBytes + kVerifierBytes) {
    fail(Errc::parse_error, "enrolment response plaintext has bad length");
  }
  return {Nonce{p.first(kNonceBytes)}, Verifier{p.subspan(kNonceBytes)}};
}

inline void append_transaction(Bytes& out, const TransactionDesc& t) {
  if (t.empty()) fail(Errc::invalid_argument, "empty transaction description");
  append_be16(out, static_cast<std::uint16_t>(t.bytes().size()));
  append(out, t.bytes());
}

inline Bytes encode_auth_challenge_inner_plain(const Nonce& n, const TransactionDesc& t) {
  Bytes out;
  append(out, n.expose());
  append_transaction(out, t);
  return out;
}

inline std::pair<Nonce, TransactionDesc> parse_auth_challenge_inner_plain(ByteView p) {
  if (p.size() < kNonceBytes + 2 + 1) {
    fail(Errc::parse_error, "authentication challenge plaintext too short");
  }
  const std::size_t len = read_be16(p.subspan(kNonceBytes));
  if (len == 0 || len > kMaxTransactionBytes || p.size() != kNonceBytes + 2 + len) {
    fail(Errc::parse_error, "authentication challenge plaintext has bad length");
  }
  auto text = p.subspan(kNonceBytes + 2, len);
  return {Nonce{p.first(kNonceBytes)},
          TransactionDesc{std::string(text.begin(), text.end())}};
}

inline Bytes encode_auth_counter_plain(Counter tmp_ct) {
  Bytes out;
  append_be64(out, tmp_ct);
  return out;
}

inline Counter parse_auth_counter_plain(ByteView p) {
  if (p.size() != kCounterBytes) fail(Errc::parse_error, "counter plaintext must be 8 bytes");
  return read_be64(p);
}

/// p'' || domain, with p'' = N || len(t) || t || v.
inline Bytes session_input(const Nonce& n, const TransactionDesc& t, const Verifier& v,
                           std::uint8_t domain) {
  Bytes out;
  append(out, n.expose());
  append_transaction(out, t);
  append(out, v.expose());
  out.push_back(domain);
  return out;
}

// ---------------------------------------------------------------------------
// Ciphertexts inside payloads

inline void append_ciphertext(Bytes& out, const AeCiphertext& ct) {
  append(out, ct.body);
  append(out, ct.tag);
}

/// body || tag where the body takes everything before the trailing 32 bytes.
inline AeCiphertext parse_ciphertext(ByteView in) {
  if (in.size() <= crypto::kTagBytes) fail(Errc::parse_error, "ciphertext too short");
  AeCiphertext ct;
  const auto body_len = in.size() - crypto::kTagBytes;
  ct.body.assign(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(body_len));
  std::copy(in.begin() + static_cast<std::ptrdiff_t>(body_len), in.end(), ct.tag.begin());
  return ct;
}

// ---------------------------------------------------------------------------
// Envelope

namespace detail {

inline bool payload_length_ok(MsgType type, std::size_t n) {
  constexpr auto tag = crypto::kTagBytes;
  switch (type) {
    case MsgType::hello_enrol:
    case MsgType::hello_auth:
      return n == 0;
    case MsgType::enrol_challenge:
      return n == kEnrolChallengePlainBytes + tag;
    case MsgType::enrol_response:
      return n >= kNonceBytes + kMinVerifierBytes + tag && n <= kNonceBytes + kVerifierBytes + tag;
    case MsgType::auth_challenge:
      return n >= 2 + (kNonceBytes + 3) + tag + kCounterBytes + tag &&
             n <= 2 + (kNonceBytes + 2 + kMaxTransactionBytes) + tag + kCounterBytes + tag;
    case MsgType::auth_response:
      return n == 32;
  }
  return false;
}

inline bool known_type(std::uint8_t t) { return t >= 0x01 && t <= 0x06; }

}  // namespace detail

inline Bytes encode(const WireMessage& m) {
  Bytes out;
  out.reserve(kHeaderBytes + m.payload.size());
  out.push_back(m.version);
  out.push_back(static_cast<std::uint8_t>(m.type));
  append(out, m.client_id.bytes);
  append(out, m.payload);
  return out;
}

/// Parses and validates an envelope. The version byte is checked before
/// anything else so a foreign envelope never reaches any crypto.
inline WireMessage parse(ByteView in) {
  if (in.size() < kHeaderBytes) fail(Errc::parse_error, "envelope shorter than header");
  if (in[0] != kVersion) fail(Errc::parse_error, "unsupported envelope version");
  if (!detail::known_type(in[1])) fail(Errc::parse_error, "unknown message type");
  WireMessage m;
  m.version = in[0];
  m.type = static_cast<MsgType>(in[1]);
  std::copy(in.begin() + 2, in.begin() + 2 + kIdBytes, m.client_id.bytes.begin());
  m.payload.assign(in.begin() + kHeaderBytes, in.end());
  if (!detail::payload_length_ok(m.type, m.payload.size())) {
    fail(Errc::parse_error, "payload length inconsistent with message type");
  }
  return m;
}

inline WireMessage build_hello(const ClientId& id, Phase phase) {
  return {kVersion, phase == Phase::enrolment ? MsgType::hello_enrol : MsgType::hello_auth, id, {}};
}

inline WireMessage make_enrol_challenge(const ClientId& id, const AeCiphertext& ct) {
  WireMessage m{kVersion, MsgType::enrol_challenge, id, {}};
  append_ciphertext(m.payload, ct);
  return m;
}

inline WireMessage make_enrol_response(const ClientId& id, const AeCiphertext& ct) {
  WireMessage m{kVersion, MsgType::enrol_response, id, {}};
  append_ciphertext(m.payload, ct);
  return m;
}

/// u16 len(inner body || inner tag) | inner body | inner tag | counter body | counter tag
inline WireMessage make_auth_challenge(const ClientId& id, const AeCiphertext& inner,
                                       const AeCiphertext& counter) {
  WireMessage m{kVersion, MsgType::auth_challenge, id, {}};
  append_be16(m.payload, static_cast<std::uint16_t>(inner.body.size() + crypto::kTagBytes));
  append_ciphertext(m.payload, inner);
  append_ciphertext(m.payload, counter);
  return m;
}

inline WireMessage make_auth_response(const ClientId& id, const Block32& response) {
  WireMessage m{kVersion, MsgType::auth_response, id, {}};
  append(m.payload, response);
  return m;
}

inline void expect_type(const WireMessage& m, MsgType type) {
  if (m.version != kVersion) fail(Errc::parse_error, "unsupported envelope version");
  if (m.type != type) {
    fail(Errc::unexpected_message,
         std::string("expected ") + std::string(to_string(type)) + ", got " +
             std::string(to_string(m.type)));
  }
  if (!detail::payload_length_ok(m.type, m.payload.size())) {
    fail(Errc::parse_error, "payload length inconsistent with message type");
  }
}

inline AeCiphertext enrol_ciphertext(const WireMessage& m) {
  if (m.type != MsgType::enrol_challenge && m.type != MsgType::enrol_response) {
    fail(Errc::unexpected_message, "not an enrolment message");
  }
  expect_type(m, m.type);
  return parse_ciphertext(m.payload);
}

struct AuthChallengePayload {
  AeCiphertext inner;
  AeCiphertext counter;
};

inline AuthChallengePayload auth_challenge_ciphertexts(const WireMessage& m) {
  expect_type(m, MsgType::auth_challenge);
  ByteView p = m.payload;
  const std::size_t inner_len = read_be16(p);
  const std::size_t counter_len = kCounterBytes + crypto::kTagBytes;
  if (p.size() != 2 + inner_len + counter_len || inner_len <= crypto::kTagBytes) {
    fail(Errc::parse_error, "authentication challenge payload has bad length");
  }
  return {parse_ciphertext(p.subspan(2, inner_len)), parse_ciphertext(p.subspan(2 + inner_len))};
}

inline Block32 auth_response_bytes(const WireMessage& m) {
  expect_type(m, MsgType::auth_response);
  Block32 r{};
  std::copy(m.payload.begin(), m.payload.end(), r.begin());
  return r;
}

// ---------------------------------------------------------------------------
// QR payload: standard base-64 of the envelope bytes.

inline std::string qr_encode(const WireMessage& m) {
  fs2fa::detail::ensure_sodium();
  const Bytes raw = encode(m);
  std::string out(sodium_base64_ENCODED_LEN(raw.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), raw.data(), raw.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(std::char_traits<char>::length(out.c_str()));
  return out;
}

inline WireMessage qr_decode(std::string_view text) {
  fs2fa::detail::ensure_sodium();
  Bytes raw(text.size() * 3 / 4 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(raw.data(), raw.size(), text.data(), text.size(), nullptr, &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size()) {
    fail(Errc::parse_error, "QR payload is not valid base-64");
  }
  raw.resize(len);
  return parse(raw);
}

}  // namespace codec
}  // namespace fs2fa
