#pragma once

// The verifying party. One ServerRecord per client: long-term AE key, the
// generator state and counter (always at or ahead of the device), the stored
// verifier, at most one pending exchange and the lockout bookkeeping.

#include "fs2fa/codec.hpp"
#include "fs2fa/crypto_core.hpp"
#include "fs2fa/errors.hpp"
#include "fs2fa/trace.hpp"
#include "fs2fa/types.hpp"

#include <chrono>
#include <functional>
#include <initializer_list>
#include <limits>
#include <optional>
#include <utility>

namespace fs2fa {

using Clock = std::chrono::system_clock;
using TimePoint = Clock::time_point;

/// Everything the device is loaded with at manufacture. Crosses the secure
/// setup channel once.
struct ProvisioningBundle {
  AeKey k;
  FsprgState st0;
  ClientId client_id;
};

struct PendingExchange {
  Phase phase = Phase::enrolment;
  Nonce nonce;
  FsprgOutput key;  // kt1 for enrolment, kt3 for authentication
  std::optional<TransactionDesc> transaction;

  void discard() noexcept {
    nonce.discard();
    key.discard();
    if (transaction) transaction->discard();
  }

  friend bool operator==(const PendingExchange&, const PendingExchange&) = default;
};

struct LockoutPolicy {
  std::uint32_t threshold = 5;
  std::chrono::seconds window = std::chrono::minutes(15);

  static LockoutPolicy disabled() {
    return {std::numeric_limits<std::uint32_t>::max(), std::chrono::minutes(15)};
  }
};

struct LockoutState {
  std::uint32_t failures = 0;
  TimePoint window_start{};
  bool locked = false;

  friend bool operator==(const LockoutState&, const LockoutState&) = default;
};

struct ServerRecord {
  ClientId client_id;
  AeKey k;
  FsprgState st;
  Counter ct = 0;
  std::optional<Verifier> verifier;
  std::optional<PendingExchange> pending;
  LockoutState lockout;

  friend bool operator==(const ServerRecord&, const ServerRecord&) = default;
};

namespace server {

struct Setup {
  ServerRecord record;
  ProvisioningBundle bundle;
};

inline Setup server_setup(Rng& rng) {
  Setup out;
  out.record.k = crypto::ae_keygen(rng);
  out.record.st = crypto::fsprg_keygen(rng);
  out.record.client_id = ClientId::generate(rng);
  out.record.ct = 0;
  out.bundle.k = out.record.k;
  out.bundle.st0 = out.record.st;
  out.bundle.client_id = out.record.client_id;
  return out;
}

namespace detail {

/// Test-only fault point between staging the new state and the new counter.
/// Anything it throws must leave the record untouched.
inline std::function<void()>& fault_between_updates() {
  static std::function<void()> hook;
  return hook;
}

/// Advances counter and state together by one step and returns the one-time key.
/// Both values are staged first and committed with non-throwing moves.
inline FsprgOutput advance(ServerRecord& r) {
  auto step = crypto::update(r.st, 1);
  FsprgState next_st = std::move(step.state);
  if (auto& hook = fault_between_updates()) hook();
  const Counter next_ct = r.ct + 1;
  r.st = std::move(next_st);
  r.ct = next_ct;
  return std::move(step.out);
}

inline void drop_pending(ServerRecord& r, StepTrace* trace, std::initializer_list<const char*> names) {
  if (r.pending) {
    r.pending->discard();
    r.pending.reset();
  }
  if (trace != nullptr) {
    for (auto* n : names) trace->discarded.emplace_back(n);
  }
}

}  // namespace detail

/// Enrolment hello. The caller vouches that the request arrived over a channel
/// on which the client has already authenticated.
inline AeCiphertext handle_hello_enrolment(ServerRecord& r, Rng& rng, bool channel_authenticated,
                                           StepTrace* trace = nullptr) {
  if (!channel_authenticated) {
    fail(Errc::channel_not_authenticated, "enrolment requires an authenticated channel");
  }
  if (r.lockout.locked) fail(Errc::locked_out, "client is locked out");
  if (r.pending) r.pending->discard();
  r.pending.reset();

  auto kt1 = detail::advance(r);
  ::fs2fa::detail::record_key(trace, "kt1", kt1.expose());
  auto n = fresh_nonce(rng);
  Bytes p = codec::encode_enrol_challenge_plain(n, r.ct);
  auto ct = crypto::ae_encrypt(r.k, p);
  zeroize(p);
  r.pending = PendingExchange{Phase::enrolment, std::move(n), std::move(kt1), std::nullopt};
  return ct;
}

/// Enrolment response. On success the verifier is stored. The pending key and
/// nonce are discarded whatever the outcome.
inline void handle_enrol_response(ServerRecord& r, const AeCiphertext& reply,
                                  StepTrace* trace = nullptr) {
  if (!r.pending || r.pending->phase != Phase::enrolment) {
    fail(Errc::no_pending_exchange, "no enrolment in progress");
  }
  auto plain = crypto::ae_decrypt(AeKey{r.pending->key}, reply);
  if (!plain) {
    detail::drop_pending(r, trace, {"kt1", "N"});
    fail(Errc::tampered_message, "enrolment response failed authentication");
  }
  std::optional<std::pair<Nonce, Verifier>> parsed;
  try {
    parsed.emplace(codec::parse_enrol_response_plain(plain->expose()));
  } catch (const ProtocolError&) {
    detail::drop_pending(r, trace, {"kt1", "N"});
    throw;
  }
  const bool nonce_ok = parsed->first == r.pending->nonce;
  if (nonce_ok) r.verifier = std::move(parsed->second);
  detail::drop_pending(r, trace, {"kt1", "N"});
  if (!nonce_ok) fail(Errc::nonce_mismatch, "enrolment response answers a different challenge");
}

struct AuthChallenge {
  AeCiphertext inner;    // Enc_kt2(N || t)
  AeCiphertext counter;  // Enc_k(tmp_ct)
};

inline AuthChallenge handle_hello_auth(ServerRecord& r, const TransactionDesc& t, Rng& rng,
                                       StepTrace* trace = nullptr) {
  if (!r.verifier) fail(Errc::not_enrolled, "client has no verifier");
  if (r.lockout.locked) fail(Errc::locked_out, "client is locked out");
  if (t.empty()) fail(Errc::invalid_argument, "empty transaction description");
  if (r.pending) r.pending->discard();
  r.pending.reset();

  auto kt2 = detail::advance(r);
  const Counter tmp_ct = r.ct;
  auto kt3 = detail::advance(r);
  ::fs2fa::detail::record_key(trace, "kt2", kt2.expose());
  ::fs2fa::detail::record_key(trace, "kt3", kt3.expose());

  auto n = fresh_nonce(rng);
  AuthChallenge out;
  Bytes p = codec::encode_auth_challenge_inner_plain(n, t);
  out.inner = crypto::ae_encrypt(AeKey{kt2}, p);
  zeroize(p);
  out.counter = crypto::ae_encrypt(r.k, codec::encode_auth_counter_plain(tmp_ct));
  kt2.discard();
  if (trace != nullptr) trace->discarded.emplace_back("kt2");
  r.pending = PendingExchange{Phase::authentication, std::move(n), std::move(kt3), t};
  return out;
}

struct AuthVerdict {
  bool accepted = false;
  std::optional<SessionKey> session_key;
  bool locked = false;
};

/// Checks an authentication response against the pending exchange. A
/// mismatch counts toward the lockout threshold within the current window.
inline AuthVerdict verify_auth_response(ServerRecord& r, const Block32& response, TimePoint now,
                                        const LockoutPolicy& policy = {},
                                        StepTrace* trace = nullptr) {
  if (!r.pending || r.pending->phase != Phase::authentication) {
    fail(Errc::no_pending_exchange, "no authentication in progress");
  }
  if (r.lockout.locked) {
    detail::drop_pending(r, trace, {"kt3", "N", "t"});
    fail(Errc::locked_out, "client is locked out");
  }
  const PrfKey key{r.pending->key};
  Bytes p = codec::session_input(r.pending->nonce, *r.pending->transaction, *r.verifier,
                                 codec::kResponseDomain);
  auto expected = crypto::prf(key, p);
  AuthVerdict verdict;
  if (equal_ct(expected, response)) {
    p.back() = codec::kSessionKeyDomain;
    auto sk = crypto::prf(key, p);
    verdict.accepted = true;
    verdict.session_key = SessionKey{sk};
    sodium_memzero(sk.data(), sk.size());
    r.lockout.failures = 0;
  } else {
    auto& lo = r.lockout;
    if (lo.failures == 0 || now - lo.window_start > policy.window) {
      lo.window_start = now;
      lo.failures = 0;
    }
    lo.failures += 1;
    if (lo.failures >= policy.threshold) lo.locked = true;
  }
  verdict.locked = r.lockout.locked;
  sodium_memzero(expected.data(), expected.size());
  zeroize(p);
  detail::drop_pending(r, trace, {"kt3", "N", "t"});
  return verdict;
}

/// Administrative reset after a lockout.
inline void admin_unlock(ServerRecord& r) { r.lockout = LockoutState{}; }

// ---------------------------------------------------------------------------
// Envelope-level wrappers

inline void check_sender(const ServerRecord& r, const WireMessage& m) {
  if (m.client_id != r.client_id) fail(Errc::unexpected_message, "message from a different client");
}

inline WireMessage on_hello_enrolment(ServerRecord& r, const WireMessage& hello, Rng& rng,
                                      bool channel_authenticated, StepTrace* trace = nullptr) {
  codec::expect_type(hello, MsgType::hello_enrol);
  check_sender(r, hello);
  return codec::make_enrol_challenge(r.client_id,
                                     handle_hello_enrolment(r, rng, channel_authenticated, trace));
}

inline void on_enrol_response(ServerRecord& r, const WireMessage& msg, StepTrace* trace = nullptr) {
  codec::expect_type(msg, MsgType::enrol_response);
  check_sender(r, msg);
  handle_enrol_response(r, codec::enrol_ciphertext(msg), trace);
}

inline WireMessage on_hello_auth(ServerRecord& r, const WireMessage& hello,
                                 const TransactionDesc& t, Rng& rng, StepTrace* trace = nullptr) {
  codec::expect_type(hello, MsgType::hello_auth);
  check_sender(r, hello);
  auto ch = handle_hello_auth(r, t, rng, trace);
  return codec::make_auth_challenge(r.client_id, ch.inner, ch.counter);
}

inline AuthVerdict on_auth_response(ServerRecord& r, const WireMessage& msg, TimePoint now,
                                    const LockoutPolicy& policy = {}, StepTrace* trace = nullptr) {
  codec::expect_type(msg, MsgType::auth_response);
  check_sender(r, msg);
  return verify_auth_response(r, codec::auth_response_bytes(msg), now, policy, trace);
}

// ---------------------------------------------------------------------------
// Record encoding (used inside the store file and as the Corrupt(S) dump)
//
// client_id(16) | k(32) | st(32) | epoch(8) | ct(8)
// | has_v(1) [| vlen(1) | v(vlen)]
// | failures(4) | window_start_s(8, signed) | locked(1)
// | has_pending(1) [| phase(1) | nonce(16) | key(32) | tlen(2) | t(tlen)]

inline void append_record(Bytes& out, const ServerRecord& r) {
  append(out, r.client_id.bytes);
  append(out, r.k.expose());
  append(out, r.st.expose());
  append_be64(out, r.st.epoch());
  append_be64(out, r.ct);
  out.push_back(r.verifier ? 1 : 0);
  if (r.verifier) {
    out.push_back(static_cast<std::uint8_t>(r.verifier->size()));
    append(out, r.verifier->expose());
  }
  const auto f = r.lockout.failures;
  out.push_back(static_cast<std::uint8_t>(f >> 24));
  out.push_back(static_cast<std::uint8_t>(f >> 16));
  out.push_back(static_cast<std::uint8_t>(f >> 8));
  out.push_back(static_cast<std::uint8_t>(f));
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(
                        r.lockout.window_start.time_since_epoch())
                        .count();
  append_be64(out, static_cast<std::uint64_t>(secs));
  out.push_back(r.lockout.locked ? 1 : 0);
  out.push_back(r.pending ? 1 : 0);
  if (r.pending) {
    out.push_back(static_cast<std::uint8_t>(r.pending->phase));
    append(out, r.pending->nonce.expose());
    append(out, r.pending->key.expose());
    if (r.pending->transaction) {
      append_be16(out, static_cast<std::uint16_t>(r.pending->transaction->bytes().size()));
      append(out, r.pending->transaction->bytes());
    } else {
      append_be16(out, 0);
    }
  }
}

class RecordReader {
 public:
  explicit RecordReader(ByteView in) : in_(in) {}

  ByteView take(std::size_t n) {
    if (in_.size() - off_ < n) fail(Errc::storage_error, "truncated server record");
    auto v = in_.subspan(off_, n);
    off_ += n;
    return v;
  }
  std::uint8_t u8() { return take(1)[0]; }
  std::uint64_t u64() { return read_be64(take(8)); }
  [[nodiscard]] bool done() const { return off_ == in_.size(); }

 private:
  ByteView in_;
  std::size_t off_ = 0;
};

inline ServerRecord read_record(RecordReader& rd) {
  ServerRecord r;
  auto id = rd.take(kIdBytes);
  std::copy(id.begin(), id.end(), r.client_id.bytes.begin());
  r.k = AeKey{rd.take(32)};
  Secret<32, FsprgStateTag> st{rd.take(32)};
  const auto epoch = rd.u64();
  r.st = FsprgState{std::move(st), epoch};
  r.ct = rd.u64();
  if (r.ct != r.st.epoch()) fail(Errc::storage_error, "server counter and generator out of step");
  if (rd.u8() != 0) {
    const auto vlen = rd.u8();
    r.verifier = Verifier{rd.take(vlen)};
  }
  auto fb = rd.take(4);
  r.lockout.failures = (std::uint32_t{fb[0]} << 24) | (std::uint32_t{fb[1]} << 16) |
                       (std::uint32_t{fb[2]} << 8) | fb[3];
  r.lockout.window_start =
      TimePoint{std::chrono::seconds(static_cast<std::int64_t>(rd.u64()))};
  r.lockout.locked = rd.u8() != 0;
  if (rd.u8() != 0) {
    PendingExchange p;
    const auto phase = rd.u8();
    if (phase != 1 && phase != 2) fail(Errc::storage_error, "bad pending phase");
    p.phase = static_cast<Phase>(phase);
    p.nonce = Nonce{rd.take(kNonceBytes)};
    p.key = FsprgOutput{rd.take(32)};
    const auto tlen = read_be16(rd.take(2));
    if (tlen > 0) {
      auto t = rd.take(tlen);
      p.transaction = TransactionDesc{std::string(t.begin(), t.end())};
    }
    r.pending = std::move(p);
  }
  return r;
}

inline Bytes serialize(const ServerRecord& r) {
  Bytes out;
  append_record(out, r);
  return out;
}

inline ServerRecord deserialize(ByteView in) {
  RecordReader rd(in);
  auto r = read_record(rd);
  if (!rd.done()) fail(Errc::storage_error, "trailing bytes after server record");
  return r;
}

}  // namespace server
}  // namespace fs2fa
