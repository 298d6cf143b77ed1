#pragma once

// The authentication token. It holds the long-term AE key k, the generator
// state st, the counter ct and the PIN-obfuscation key sa, and nothing else.
// PINs, verifiers, one-time keys, nonces and transactions live only for the
// duration of one step and are wiped on every exit path.
//
// Steps mutate the state in place. Counter and generator state are committed
// together, so an abort never leaves them split.

#include "fs2fa/codec.hpp"
#include "fs2fa/crypto_core.hpp"
#include "fs2fa/errors.hpp"
#include "fs2fa/policy.hpp"
#include "fs2fa/trace.hpp"
#include "fs2fa/types.hpp"

#include <functional>
#include <optional>

namespace fs2fa {

struct DeviceState {
  ClientId client_id;
  AeKey k;
  FsprgState st;
  Counter ct = 0;
  PrfKey sa;
  std::uint8_t verifier_len = kVerifierBytes;

  friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

namespace device {

/// Asks the client for a PIN. Only called once every incoming ciphertext has
/// authenticated.
using PinSource = std::function<Pin()>;

inline constexpr std::uint8_t kStateFileVersion = 0x01;
inline constexpr std::size_t kStateFileBytes = 1 + kIdBytes + 32 + 32 + 8 + 8 + 32 + 1;

inline DeviceState device_setup(AeKey k, FsprgState st0, const ClientId& client_id, Rng& rng,
                                std::size_t verifier_len = kVerifierBytes) {
  if (st0.epoch() != 0) fail(Errc::invalid_argument, "setup requires a genesis generator state");
  if (verifier_len < kMinVerifierBytes || verifier_len > kVerifierBytes) {
    fail(Errc::invalid_argument, "verifier length must be 4..32");
  }
  DeviceState s;
  s.client_id = client_id;
  s.k = std::move(k);
  s.st = std::move(st0);
  s.ct = 0;
  s.sa = crypto::prf_keygen(rng);
  s.verifier_len = static_cast<std::uint8_t>(verifier_len);
  return s;
}

inline Verifier compute_verifier(const PrfKey& sa, const Pin& pin,
                                 std::optional<std::size_t> truncation = std::nullopt) {
  const std::size_t len = truncation.value_or(kVerifierBytes);
  if (len == 0 || len > kVerifierBytes) fail(Errc::invalid_argument, "bad truncation");
  ++crypto::op_counters().verifier;
  auto full = crypto::prf(sa, pin.expose());
  Verifier v{ByteView(full).first(len)};
  sodium_memzero(full.data(), full.size());
  return v;
}

inline bool check_pin_match(const Pin& pin, const Pin& confirm) {
  return equal_ct(pin.expose(), confirm.expose());
}

/// Enrolment, device side. `prompt` is called twice (entry and confirmation).
inline AeCiphertext handle_enrol_challenge(DeviceState& state, const AeCiphertext& challenge,
                                           const PinSource& prompt, StepTrace* trace = nullptr) {
  Pin pin;
  Pin confirm;
  Verifier v;
  FsprgOutput kt1;
  Nonce n;
  detail::Discarder discard(trace);
  discard.track("PIN", [&] { pin.discard(); confirm.discard(); });
  discard.track("v", [&] { v.discard(); });
  discard.track("kt1", [&] { kt1.discard(); });
  discard.track("N", [&] { n.discard(); });

  auto plain = crypto::ae_decrypt(state.k, challenge);
  if (!plain) fail(Errc::tampered_message, "enrolment challenge failed authentication");
  auto [nonce, ct_m] = codec::parse_enrol_challenge_plain(plain->expose());
  n = std::move(nonce);
  plain->discard();

  if (ct_m <= state.ct) fail(Errc::stale_challenge, "challenge counter is not ahead of device");
  const Counter d = ct_m - state.ct;
  if (d > crypto::kMaxUpdateDistance) fail(Errc::desync_too_large, "catch-up distance too large");

  pin = prompt();
  confirm = prompt();
  if (trace != nullptr) trace->pin_prompts += 2;
  if (!check_pin_match(pin, confirm)) fail(Errc::pin_entry_mismatch, "PIN entries differ");

  v = compute_verifier(state.sa, pin, state.verifier_len);

  auto step = crypto::update(state.st, d);
  kt1 = std::move(step.out);
  state.st = std::move(step.state);
  state.ct += d;
  detail::record_key(trace, "kt1", kt1.expose());

  Bytes p = codec::encode_enrol_response_plain(n, v);
  auto reply = crypto::ae_encrypt(AeKey{kt1}, p);
  zeroize(p);
  return reply;
}

inline AeCiphertext handle_enrol_challenge(DeviceState& state, const AeCiphertext& challenge,
                                           const Pin& pin, const Pin& pin_confirm,
                                           StepTrace* trace = nullptr) {
  int calls = 0;
  return handle_enrol_challenge(
      state, challenge, [&]() { return ++calls == 1 ? pin : pin_confirm; }, trace);
}

struct AuthOutcome {
  Block32 response{};
  SessionKey session_key;
  TransactionDesc transaction;
};

/// Authentication, device side.
///
/// The counter ciphertext (under k) is opened first because kt2 cannot be
/// derived before catch-up. Once it authenticates, the device commits the
/// catch-up to the challenged counter; later aborts keep that progress.
inline AuthOutcome handle_auth_challenge(DeviceState& state, const AeCiphertext& inner,
                                         const AeCiphertext& counter_ct, const PinSource& prompt,
                                         const TransactionCheck& accept,
                                         StepTrace* trace = nullptr) {
  Pin pin;
  Verifier v;
  FsprgOutput kt2;
  FsprgOutput kt3;
  Nonce n;
  TransactionDesc t;
  detail::Discarder discard(trace);
  discard.track("PIN", [&] { pin.discard(); });
  discard.track("v", [&] { v.discard(); });
  discard.track("kt2", [&] { kt2.discard(); });
  discard.track("kt3", [&] { kt3.discard(); });
  discard.track("N", [&] { n.discard(); });
  discard.track("t", [&] { t.discard(); });

  auto counter_plain = crypto::ae_decrypt(state.k, counter_ct);
  if (!counter_plain) fail(Errc::tampered_message, "counter ciphertext failed authentication");
  const Counter tmp_ct = codec::parse_auth_counter_plain(counter_plain->expose());
  if (tmp_ct <= state.ct) fail(Errc::stale_challenge, "challenge counter is not ahead of device");
  const Counter d = tmp_ct - state.ct;
  if (d > crypto::kMaxUpdateDistance) fail(Errc::desync_too_large, "catch-up distance too large");

  {
    auto step = crypto::update(state.st, d);
    kt2 = std::move(step.out);
    state.st = std::move(step.state);
    state.ct += d;
  }
  detail::record_key(trace, "kt2", kt2.expose());

  auto inner_plain = crypto::ae_decrypt(AeKey{kt2}, inner);
  if (!inner_plain) fail(Errc::tampered_message, "transaction ciphertext failed authentication");
  {
    auto [nonce, tx] = codec::parse_auth_challenge_inner_plain(inner_plain->expose());
    n = std::move(nonce);
    t = std::move(tx);
  }
  inner_plain->discard();

  if (!accept(t)) fail(Errc::policy_rejected, "client rejected the transaction");

  pin = prompt();
  if (trace != nullptr) trace->pin_prompts += 1;
  v = compute_verifier(state.sa, pin, state.verifier_len);

  {
    auto step = crypto::update(state.st, 1);
    kt3 = std::move(step.out);
    state.st = std::move(step.state);
    state.ct += 1;
  }
  detail::record_key(trace, "kt3", kt3.expose());

  const PrfKey response_key{kt3};
  AuthOutcome out;
  Bytes p = codec::session_input(n, t, v, codec::kResponseDomain);
  out.response = crypto::prf(response_key, p);
  p.back() = codec::kSessionKeyDomain;
  auto sk = crypto::prf(response_key, p);
  out.session_key = SessionKey{sk};
  sodium_memzero(sk.data(), sk.size());
  zeroize(p);
  out.transaction = t;
  return out;
}

inline AuthOutcome handle_auth_challenge(DeviceState& state, const AeCiphertext& inner,
                                         const AeCiphertext& counter_ct, const Pin& pin,
                                         const TransactionCheck& accept,
                                         StepTrace* trace = nullptr) {
  return handle_auth_challenge(
      state, inner, counter_ct, [&]() { return pin; }, accept, trace);
}

// ---------------------------------------------------------------------------
// Envelope-level wrappers

inline void check_addressee(const DeviceState& state, const WireMessage& m) {
  if (m.client_id != state.client_id) {
    fail(Errc::unexpected_message, "message addressed to a different client");
  }
}

inline WireMessage respond_enrol(DeviceState& state, const WireMessage& challenge,
                                 const PinSource& prompt, StepTrace* trace = nullptr) {
  codec::expect_type(challenge, MsgType::enrol_challenge);
  check_addressee(state, challenge);
  auto reply = handle_enrol_challenge(state, codec::enrol_ciphertext(challenge), prompt, trace);
  return codec::make_enrol_response(state.client_id, reply);
}

struct AuthReply {
  WireMessage message;
  AuthOutcome outcome;
};

inline AuthReply respond_auth(DeviceState& state, const WireMessage& challenge,
                              const PinSource& prompt, const TransactionCheck& accept,
                              StepTrace* trace = nullptr) {
  check_addressee(state, challenge);
  auto cts = codec::auth_challenge_ciphertexts(challenge);
  auto outcome = handle_auth_challenge(state, cts.inner, cts.counter, prompt, accept, trace);
  auto msg = codec::make_auth_response(state.client_id, outcome.response);
  return {std::move(msg), std::move(outcome)};
}

// ---------------------------------------------------------------------------
// State file: version(1) | client_id(16) | k(32) | st(32) | epoch(8) | ct(8) | sa(32) | vlen(1)

inline Bytes serialize(const DeviceState& s) {
  Bytes out;
  out.reserve(kStateFileBytes);
  out.push_back(kStateFileVersion);
  append(out, s.client_id.bytes);
  append(out, s.k.expose());
  append(out, s.st.expose());
  append_be64(out, s.st.epoch());
  append_be64(out, s.ct);
  append(out, s.sa.expose());
  out.push_back(s.verifier_len);
  return out;
}

inline DeviceState deserialize(ByteView in) {
  if (in.size() != kStateFileBytes) fail(Errc::storage_error, "device state has wrong size");
  if (in[0] != kStateFileVersion) fail(Errc::storage_error, "unsupported device state version");
  DeviceState s;
  std::size_t off = 1;
  std::copy_n(in.begin() + 1, kIdBytes, s.client_id.bytes.begin());
  off += kIdBytes;
  s.k = AeKey{in.subspan(off, 32)};
  off += 32;
  Secret<32, FsprgStateTag> st_bytes{in.subspan(off, 32)};
  off += 32;
  const auto epoch = read_be64(in.subspan(off));
  off += 8;
  s.st = FsprgState{std::move(st_bytes), epoch};
  s.ct = read_be64(in.subspan(off));
  off += 8;
  s.sa = PrfKey{in.subspan(off, 32)};
  off += 32;
  s.verifier_len = in[off];
  if (s.verifier_len < kMinVerifierBytes || s.verifier_len > kVerifierBytes) {
    fail(Errc::storage_error, "device state has bad verifier length");
  }
  if (s.ct != s.st.epoch()) fail(Errc::storage_error, "device counter and generator out of step");
  return s;
}

}  // namespace device
}  // namespace fs2fa
