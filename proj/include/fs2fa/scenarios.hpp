#pragma once

// Five adversary scripts, each named after the goal it attacks and the
// capabilities it is given.
//
// 1  impersonate   with the PIN and the traffic, no token
// 2  impersonate   with the token and the traffic, no PIN
// 3  learn PIN     with the token and the traffic
// 4  learn PIN     with the server record and the traffic
// 5  alter t       with the traffic (and either factor)

#include "fs2fa/attacks.hpp"
#include "fs2fa/harness.hpp"

#include <string>
#include <string_view>

namespace fs2fa::scenarios {

struct ScenarioReport {
  int id = 0;
  std::string name;
  bool adversary_succeeded = false;
  EventLog events;
};

inline constexpr int kCount = 5;

constexpr std::string_view name(int id) {
  switch (id) {
    case 1: return "auth-vs-pin-mitm";
    case 2: return "auth-vs-device-mitm";
    case 3: return "pin-vs-device-mitm";
    case 4: return "pin-vs-server-mitm";
    case 5: return "transaction-vs-mitm";
    default: return "";
  }
}

inline int parse_id(std::string_view s) {
  for (int i = 1; i <= kCount; ++i) {
    if (s == name(i) || s == std::to_string(i)) return i;
  }
  fail(Errc::invalid_argument, "unknown scenario: " + std::string(s));
}

namespace detail {

inline void merge(EventLog& into, const EventLog& from) {
  for (const auto& l : from.lines()) into.emit("inner", {{"line", "\"" + l + "\""}});
}

/// Knows the PIN and every past message; must answer a fresh challenge
/// without the token. Tries every captured response and a response computed
/// under a random key.
inline bool scenario1(std::uint64_t seed, EventLog& ev) {
  Game g({.seed = seed});
  auto c = g.new_client();
  auto s = g.new_server();
  auto t = g.execute(c, s);
  const auto pin = g.corrupt_client_pin();
  ev.emit("adversary_knows", {{"pin", "yes"}, {"device", "no"}});

  bool success = false;
  for (const auto& e : t.entries()) {
    if (e.message.type != MsgType::auth_response) continue;
    auto s2 = g.new_server();
    auto c2 = g.new_client();
    auto hello = g.send(c2, Start{Phase::authentication});
    (void)g.send(s2, *hello.reply);
    (void)g.send(s2, e.message);
    success |= g.instance(s2).status == Status::accepted;
  }
  auto s3 = g.new_server();
  auto c3 = g.new_client();
  auto hello = g.send(c3, Start{Phase::authentication});
  (void)g.send(s3, *hello.reply);
  const auto guess = g.rng().bytes<32>();
  (void)g.send(s3, codec::make_auth_response(g.client_id(), guess));
  success |= g.instance(s3).status == Status::accepted;
  ev.emit("impersonation", {{"accepted", success ? "1" : "0"}});
  return success;
}

/// Holds a copy of the token but not the PIN. Offline search first, then
/// online guessing with the cloned token until the server locks the client.
inline bool scenario2(std::uint64_t seed, EventLog& ev) {
  attacks::BruteForceResult offline;
  auto rep = attacks::main_offline(seed, &offline);
  ev.emit("offline", {{"candidates", std::to_string(offline.candidates.size())}});

  Game g({.seed = seed});
  auto c = g.new_client();
  auto s = g.new_server();
  g.execute(c, s);
  auto clone = device::deserialize(g.corrupt_client_device());
  // Guesses in the order of the adversary's own randomness.
  SeededRng guess_rng(seed ^ 0xA5A5A5A5ULL);
  ServerRecord record = g.record();
  const LockoutPolicy policy{};
  const TimePoint now{std::chrono::seconds(1'700'000'000)};
  bool success = false;
  int attempts = 0;
  for (;;) {
    server::AuthChallenge ch;
    try {
      ch = server::handle_hello_auth(record, make_transaction(999, "mallory"), guess_rng);
    } catch (const ProtocolError& e) {
      ev.emit("online_stopped", {{"reason", std::string(to_string(e.code()))},
                                 {"attempts", std::to_string(attempts)}});
      break;
    }
    const auto guess = Pin::nth(guess_rng.uniform(10'000), 4);
    auto out = device::handle_auth_challenge(clone, ch.inner, ch.counter, guess, approve_all());
    ++attempts;
    auto v = server::verify_auth_response(record, out.response, now, policy);
    if (v.accepted) {
      success = true;
      ev.emit("online_guess_accepted", {{"attempts", std::to_string(attempts)}});
      break;
    }
  }
  return success || rep.adversary_succeeded;
}

/// Holds the token and all traffic; wants the PIN.
inline bool scenario3(std::uint64_t seed, EventLog& ev) {
  attacks::BruteForceResult r;
  auto rep = attacks::main_offline(seed, &r);
  merge(ev, rep.events);
  ev.emit("pin_candidates", {{"count", std::to_string(r.candidates.size())}});
  return r.candidates.size() == 1;
}

/// Holds the server record and all traffic; wants the PIN.
inline bool scenario4(std::uint64_t seed, EventLog& ev) {
  Game g({.seed = seed});
  auto c = g.new_client();
  auto s = g.new_server();
  g.execute(c, s);
  attacks::ServerDumpOracle oracle(g.corrupt_server());
  auto r = attacks::offline_brute_force(oracle);
  ev.emit("pin_candidates", {{"count", std::to_string(r.candidates.size())}});
  return r.candidates.size() == 1;
}

/// Flips a bit in the transaction ciphertext, then splices in the transaction
/// ciphertext from an earlier challenge. The token must refuse both.
inline bool scenario5(std::uint64_t seed, EventLog& ev) {
  Game g({.seed = seed, .lockout = LockoutPolicy::disabled()});
  auto c = g.new_client();
  auto s = g.new_server();
  g.execute(c, s);

  bool success = false;
  auto attempt = [&](auto&& mutate, const char* what) {
    auto cx = g.new_client();
    auto sx = g.new_server();
    auto hello = g.send(cx, Start{Phase::authentication});
    auto ch = g.send(sx, *hello.reply);
    WireMessage m = *ch.reply;
    mutate(m);
    auto r = g.send(cx, m);
    ev.emit("tamper", {{"kind", what},
                       {"device", r.abort ? std::string(to_string(*r.abort)) : "accepted"}});
    success |= !r.abort;
  };

  attempt([](WireMessage& m) { m.payload[2 + 5] ^= 0x01; }, "bitflip");

  // Capture one challenge to splice from.
  auto cy = g.new_client();
  auto sy = g.new_server();
  auto hy = g.send(cy, Start{Phase::authentication});
  g.set_transaction("amount=999999;payee=mallory");
  const auto old = codec::auth_challenge_ciphertexts(*g.send(sy, *hy.reply).reply);
  g.set_transaction("amount=120;payee=alice");
  attempt(
      [&](WireMessage& m) {
        auto cur = codec::auth_challenge_ciphertexts(m);
        m = codec::make_auth_challenge(m.client_id, old.inner, cur.counter);
      },
      "splice");
  return success;
}

}  // namespace detail

inline ScenarioReport run_scenario(int id, std::uint64_t seed) {
  ScenarioReport r;
  r.id = id;
  r.name = std::string(name(id));
  if (r.name.empty()) fail(Errc::invalid_argument, "unknown scenario id " + std::to_string(id));
  r.events.emit("scenario", {{"id", std::to_string(id)}, {"name", r.name}, {"seed", std::to_string(seed)}});
  switch (id) {
    case 1: r.adversary_succeeded = detail::scenario1(seed, r.events); break;
    case 2: r.adversary_succeeded = detail::scenario2(seed, r.events); break;
    case 3: r.adversary_succeeded = detail::scenario3(seed, r.events); break;
    case 4: r.adversary_succeeded = detail::scenario4(seed, r.events); break;
    case 5: r.adversary_succeeded = detail::scenario5(seed, r.events); break;
  }
  r.events.emit("result", {{"adversary", r.adversary_succeeded ? "succeeded" : "failed"}});
  return r;
}

}  // namespace fs2fa::scenarios
