#pragma once

// Offline PIN search and the other scripted attacks.
//
// The search walks the whole PIN universe and keeps every PIN the oracle
// cannot rule out. The oracle is the only part that knows the target: what
// the attacker holds (a token dump, a server dump, captured messages) and
// which tests that material allows.

#include "fs2fa/baselines.hpp"
#include "fs2fa/codec.hpp"
#include "fs2fa/device.hpp"
#include "fs2fa/harness.hpp"
#include "fs2fa/server.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace fs2fa::attacks {

class PinOracle {
 public:
  virtual ~PinOracle() = default;
  /// False iff the attacker's material proves `pin` is not the client's PIN.
  [[nodiscard]] virtual bool consistent(const Pin& pin) const = 0;
};

struct BruteForceResult {
  std::size_t pin_length = 4;
  std::uint64_t universe = 0;
  std::vector<std::uint64_t> candidates;  // indices into the universe, ascending

  [[nodiscard]] std::string candidate(std::size_t i) const {
    return Pin::nth(candidates.at(i), pin_length).str();
  }
};

inline BruteForceResult offline_brute_force(const PinOracle& oracle, std::size_t pin_length = 4) {
  BruteForceResult r;
  r.pin_length = pin_length;
  r.universe = pin_universe_size(pin_length);
  for (std::uint64_t i = 0; i < r.universe; ++i) {
    if (oracle.consistent(Pin::nth(i, pin_length))) r.candidates.push_back(i);
  }
  return r;
}

/// Token dump (k, sa) and one captured (N, t, response) exchange.
class Strawman2Oracle final : public PinOracle {
 public:
  Strawman2Oracle(baselines::Strawman2Client dump, Nonce n, TransactionDesc t, Block32 response)
      : dump_(std::move(dump)), n_(std::move(n)), t_(std::move(t)), response_(response) {}

  [[nodiscard]] bool consistent(const Pin& pin) const override {
    const auto v = baselines::s2_enrol(dump_.sa, pin);
    return baselines::s2_verify(dump_.k, n_, t_, v, response_);
  }

 private:
  baselines::Strawman2Client dump_;
  Nonce n_;
  TransactionDesc t_;
  Block32 response_;
};

/// Token dump taken after the captured exchanges, plus every captured message.
///
/// The attacker holds k, the current generator state and sa. It opens what it
/// can: anything under k, and anything under a key it can derive by running
/// the generator forward `lookahead` steps. Each opened enrolment response
/// yields a verifier to compare against; each opened transaction ciphertext
/// yields (N, t) to recompute responses under every derivable key. With no
/// opened material there is no test and every PIN stays a candidate.
class MainProtocolOracle final : public PinOracle {
 public:
  MainProtocolOracle(ByteView device_dump, const std::vector<WireMessage>& captured,
                     std::size_t lookahead = 64)
      : state_(device::deserialize(device_dump)) {
    std::vector<FsprgOutput> keys;
    FsprgState st = state_.st;
    for (std::size_t i = 0; i < lookahead && st.epoch() < crypto::kMaxEpoch; ++i) {
      auto step = crypto::fsprg_next(st);
      keys.push_back(std::move(step.out));
      st = std::move(step.state);
    }

    std::vector<std::pair<Nonce, TransactionDesc>> opened;
    std::vector<Block32> responses;
    for (const auto& m : captured) {
      switch (m.type) {
        case MsgType::enrol_response: {
          const auto ct = codec::enrol_ciphertext(m);
          for (const auto& key : keys) {
            if (auto p = crypto::ae_decrypt(AeKey{key}, ct)) {
              auto [n, v] = codec::parse_enrol_response_plain(p->expose());
              verifiers_.push_back(std::move(v));
            }
          }
          break;
        }
        case MsgType::auth_challenge: {
          const auto cts = codec::auth_challenge_ciphertexts(m);
          if (auto c = crypto::ae_decrypt(state_.k, cts.counter)) {
            ++counters_opened_;
          }
          for (const auto& key : keys) {
            if (auto p = crypto::ae_decrypt(AeKey{key}, cts.inner)) {
              opened.push_back(codec::parse_auth_challenge_inner_plain(p->expose()));
            }
          }
          break;
        }
        case MsgType::auth_response:
          responses.push_back(codec::auth_response_bytes(m));
          break;
        default:
          break;
      }
    }
    for (const auto& [n, t] : opened) {
      for (const auto& r : responses) {
        for (const auto& key : keys) response_tests_.push_back({n, t, r, PrfKey{key}});
      }
    }
  }

  [[nodiscard]] bool consistent(const Pin& pin) const override {
    if (verifiers_.empty() && response_tests_.empty()) return true;
    const auto v = device::compute_verifier(state_.sa, pin, state_.verifier_len);
    for (const auto& known : verifiers_) {
      if (known == v) return true;
    }
    for (const auto& test : response_tests_) {
      auto in = codec::session_input(test.n, test.t, v, codec::kResponseDomain);
      if (equal_ct(crypto::prf(test.key, in), test.response)) return true;
    }
    return false;
  }

  /// Number of ciphertexts the dump let the attacker open (counter values only).
  [[nodiscard]] std::size_t counters_opened() const noexcept { return counters_opened_; }
  [[nodiscard]] std::size_t tests_available() const noexcept {
    return verifiers_.size() + response_tests_.size();
  }

 private:
  struct ResponseTest {
    Nonce n;
    TransactionDesc t;
    Block32 response;
    PrfKey key;
  };

  DeviceState state_;
  std::vector<Verifier> verifiers_;
  std::vector<ResponseTest> response_tests_;
  std::size_t counters_opened_ = 0;
};

/// Server dump (k, st, ct, v) plus captured messages. The verifier is keyed by
/// sa, which the server never holds, so no PIN guess can be checked against it.
class ServerDumpOracle final : public PinOracle {
 public:
  explicit ServerDumpOracle(ByteView server_dump) : record_(server::deserialize(server_dump)) {}

  [[nodiscard]] bool consistent(const Pin&) const override {
    // The only PIN-dependent value is v = PRF_sa(PIN); without sa there is
    // nothing to recompute.
    return true;
  }

 private:
  ServerRecord record_;
};

// ---------------------------------------------------------------------------
// Scripted two-party attacks. Each returns true iff the adversary succeeded.

struct AttackReport {
  bool adversary_succeeded = false;
  EventLog events;
};

/// Strawman II, end to end: capture one exchange, dump the token, search.
inline AttackReport strawman2_offline(std::uint64_t seed, BruteForceResult* out = nullptr) {
  SeededRng rng(seed);
  AttackReport rep;
  baselines::Strawman2Client client{crypto::prf_keygen(rng), crypto::prf_keygen(rng)};
  const Pin pin = Pin::nth(rng.uniform(10'000), 4);
  baselines::Strawman2Server srv{client.k, baselines::s2_enrol(client.sa, pin)};
  auto n = fresh_nonce(rng);
  const auto t = make_transaction(250, "bob");
  const auto r = baselines::s2_respond(client.k, n, t, baselines::s2_enrol(client.sa, pin));
  rep.events.emit("captured", {{"protocol", "strawman2"}});
  Strawman2Oracle oracle(client, n, t, r);
  auto result = offline_brute_force(oracle);
  rep.events.emit("search_done", {{"candidates", std::to_string(result.candidates.size())}});
  rep.adversary_succeeded = result.candidates.size() == 1 && result.candidate(0) == pin.str();
  if (out != nullptr) *out = std::move(result);
  return rep;
}

/// The same search against the main protocol: a full honest execution is
/// captured, then the token is dumped.
inline AttackReport main_offline(std::uint64_t seed, BruteForceResult* out = nullptr) {
  Game g({.seed = seed});
  auto c = g.new_client();
  auto s = g.new_server();
  auto transcript = g.execute(c, s);
  std::vector<WireMessage> captured;
  for (const auto& e : transcript.entries()) captured.push_back(e.message);
  const auto dump = g.corrupt_client_device();
  MainProtocolOracle oracle(dump, captured);
  AttackReport rep;
  rep.events.emit("captured", {{"protocol", "main"}, {"messages", std::to_string(captured.size())}});
  auto result = offline_brute_force(oracle);
  rep.events.emit("search_done", {{"candidates", std::to_string(result.candidates.size())},
                                  {"tests_available", std::to_string(oracle.tests_available())}});
  rep.adversary_succeeded = result.candidates.size() < result.universe;
  if (out != nullptr) *out = std::move(result);
  return rep;
}

/// Replays a captured, accepted authentication response against the next challenge.
inline AttackReport main_replay(std::uint64_t seed) {
  Game g({.seed = seed, .lockout = LockoutPolicy::disabled()});
  auto c = g.new_client();
  auto s = g.new_server();
  auto transcript = g.execute(c, s);
  const auto old_response = transcript.entries().back().message;

  auto s2 = g.new_server();
  auto c2 = g.new_client();
  auto hello = g.send(c2, Start{Phase::authentication});
  (void)g.send(s2, *hello.reply);  // challenge goes unanswered by the device
  auto r = g.send(s2, old_response);
  AttackReport rep;
  rep.events = g.events();
  rep.adversary_succeeded = g.instance(s2).status == Status::accepted;
  rep.events.emit("replay_result", {{"server", std::string(to_string(g.instance(s2).status))},
                                    {"reason", r.abort ? std::string(to_string(*r.abort)) : "none"}});
  return rep;
}

/// Strawman I: replaying an old response fails, but a token borrowed once
/// (its key read out) answers every later challenge.
inline AttackReport strawman1_preplay(std::uint64_t seed) {
  SeededRng rng(seed);
  AttackReport rep;
  baselines::Strawman1State shared{crypto::prf_keygen(rng)};
  auto n0 = baselines::s1_challenge(rng);
  const auto r0 = baselines::s1_respond(shared.k, n0);
  auto n1 = baselines::s1_challenge(rng);
  const bool replay_ok = baselines::s1_verify(shared.k, n1, r0);
  rep.events.emit("replay", {{"accepted", replay_ok ? "1" : "0"}});
  const PrfKey stolen = shared.k;
  auto n2 = baselines::s1_challenge(rng);
  const bool forged_ok = baselines::s1_verify(shared.k, n2, baselines::s1_respond(stolen, n2));
  rep.events.emit("forge_with_stolen_key", {{"accepted", forged_ok ? "1" : "0"}});
  rep.adversary_succeeded = forged_ok;
  return rep;
}

}  // namespace fs2fa::attacks
