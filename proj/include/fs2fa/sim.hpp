#pragma once

// Randomized exchange simulations over a faulty channel.
//
// A run provisions one client, enrols it over a clean channel, then performs a
// number of enrolment and authentication exchanges while the channel drops,
// tampers with, replays and reorders messages. After every delivery the run
// checks that the server counter is at or ahead of the device counter and that
// each side's counter equals its generator epoch. A final exchange over a clean
// channel with the PIN the server last accepted must succeed.

#include "fs2fa/codec.hpp"
#include "fs2fa/device.hpp"
#include "fs2fa/harness.hpp"
#include "fs2fa/policy.hpp"
#include "fs2fa/server.hpp"

#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace fs2fa::sim {

struct ChannelConfig {
  double drop_prob = 0.0;
  double replay_prob = 0.0;  // chance per delivery to first inject an old message
  double tamper_prob = 0.0;  // chance per delivery to flip one bit
  bool reorder = false;      // challenges may be held back and delivered late
  std::uint64_t seed = 0;
};

struct RunReport {
  std::uint64_t seed = 0;
  int exchanges = 0;
  int accepted = 0;
  int clean_exchanges = 0;
  int drops = 0;
  int replays = 0;
  int tampers = 0;
  int reorders = 0;
  bool invariant_held = true;
  bool clean_exchanges_succeeded = true;
  bool final_exchange_succeeded = false;
  std::optional<std::string> panic;  // anything other than a protocol abort
  EventLog events;

  [[nodiscard]] bool ok() const {
    return invariant_held && clean_exchanges_succeeded && final_exchange_succeeded && !panic;
  }
};

namespace detail {

class Run {
 public:
  Run(const ChannelConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(seed), chan_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
    auto setup = server::server_setup(rng_);
    record_ = std::move(setup.record);
    device_ = device::device_setup(std::move(setup.bundle.k), std::move(setup.bundle.st0),
                                   setup.bundle.client_id, rng_);
    report_.seed = seed;
  }

  RunReport run(int exchanges) {
    try {
      const Pin first = random_pin();
      if (!exchange(Phase::enrolment, first, false)) fail_clean("initial enrolment");
      for (int i = 0; i < exchanges; ++i) {
        const Phase p = rng_.bernoulli(0.25) ? Phase::enrolment : Phase::authentication;
        exchange(p, p == Phase::enrolment ? random_pin() : server_pin_, true);
      }
      delayed_.clear();
      report_.final_exchange_succeeded = exchange(Phase::authentication, server_pin_, false);
    } catch (const std::exception& e) {
      report_.panic = e.what();
      report_.events.emit("panic", {{"what", e.what()}});
    }
    return std::move(report_);
  }

 private:
  Pin random_pin() { return Pin::nth(rng_.uniform(10'000), 4); }

  void fail_clean(const char* what) {
    report_.clean_exchanges_succeeded = false;
    report_.events.emit("clean_failure", {{"exchange", what}});
  }

  void check() {
    const bool ok = record_.ct >= device_.ct && record_.ct == record_.st.epoch() &&
                    device_.ct == device_.st.epoch();
    if (!ok) {
      report_.invariant_held = false;
      report_.events.emit("invariant_violation", {{"ct_s", std::to_string(record_.ct)},
                                                  {"ct_c", std::to_string(device_.ct)}});
    }
  }

  /// Decides what the channel does to `m`. Returns nullopt if dropped.
  std::optional<WireMessage> transmit(Direction d, WireMessage m, bool faulty) {
    report_.events.message(d, m);
    history_.push_back({d, m});
    if (!faulty) return m;
    if (chan_rng_.bernoulli(cfg_.drop_prob)) {
      ++report_.drops;
      dirty_ = true;
      report_.events.emit("drop", {{"type", std::string(to_string(m.type))}});
      return std::nullopt;
    }
    if (!m.payload.empty() && chan_rng_.bernoulli(cfg_.tamper_prob)) {
      const auto bit = chan_rng_.uniform(m.payload.size() * 8);
      m.payload[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      ++report_.tampers;
      dirty_ = true;
      report_.events.emit("tamper", {{"type", std::string(to_string(m.type))},
                                     {"bit", std::to_string(bit)}});
    }
    return m;
  }

  /// Occasionally injects an old message headed the same way before the real one.
  void maybe_replay(Direction d, bool faulty) {
    if (!faulty || !chan_rng_.bernoulli(cfg_.replay_prob)) return;
    std::vector<const WireMessage*> pool;
    for (const auto& [dir, m] : history_) {
      if (dir == d && m.type != MsgType::hello_enrol && m.type != MsgType::hello_auth) {
        pool.push_back(&m);
      }
    }
    if (pool.empty()) return;
    const WireMessage old = *pool[chan_rng_.uniform(pool.size())];
    ++report_.replays;
    dirty_ = true;
    report_.events.emit("replay", {{"type", std::string(to_string(old.type))}});
    if (d == Direction::server_to_client) {
      to_device(old);
    } else {
      to_server(old);
    }
  }

  /// Device side of a delivery. Returns the device's reply, if any.
  std::optional<WireMessage> to_device(const WireMessage& m) {
    std::optional<WireMessage> reply;
    try {
      if (m.type == MsgType::enrol_challenge) {
        reply = device::respond_enrol(device_, m, [this] { return typed_pin_; });
      } else if (m.type == MsgType::auth_challenge) {
        auto r = device::respond_auth(device_, m, [this] { return typed_pin_; }, approve_all());
        device_sk_ = std::move(r.outcome.session_key);
        reply = std::move(r.message);
      }
    } catch (const ProtocolError& e) {
      report_.events.emit("abort", {{"side", "device"}, {"reason", std::string(to_string(e.code()))}});
    }
    check();
    return reply;
  }

  /// Server side of a delivery of a response. Returns true on acceptance.
  bool to_server(const WireMessage& m) {
    bool accepted = false;
    try {
      if (m.type == MsgType::enrol_response) {
        server::on_enrol_response(record_, m);
        accepted = true;
        server_pin_ = typed_pin_;
        report_.events.emit("enrolled");
      } else if (m.type == MsgType::auth_response) {
        auto v = server::on_auth_response(record_, m, now_, LockoutPolicy::disabled());
        if (v.accepted) {
          accepted = true;
          server_sk_ = std::move(*v.session_key);
          report_.events.emit("accept");
        } else {
          report_.events.emit("reject");
        }
      }
    } catch (const ProtocolError& e) {
      report_.events.emit("abort", {{"side", "server"}, {"reason", std::string(to_string(e.code()))}});
    }
    check();
    return accepted;
  }

  /// One exchange. Returns true if the server accepted its final message.
  bool exchange(Phase phase, const Pin& pin, bool faulty) {
    ++report_.exchanges;
    dirty_ = false;
    typed_pin_ = pin;
    device_sk_.discard();
    server_sk_.discard();

    // The hello itself is not secret and not protected; the channel can still lose it.
    auto hello = transmit(Direction::client_to_server, codec::build_hello(device_.client_id, phase), faulty);
    if (!hello) return false;
    WireMessage challenge;
    try {
      if (phase == Phase::enrolment) {
        challenge = server::on_hello_enrolment(record_, *hello, rng_, true);
      } else {
        challenge = server::on_hello_auth(record_, *hello, make_transaction(10, "alice"), rng_);
      }
    } catch (const ProtocolError& e) {
      report_.events.emit("abort", {{"side", "server"}, {"reason", std::string(to_string(e.code()))}});
      check();
      return finish(false);
    }
    check();

    maybe_replay(Direction::server_to_client, faulty);
    auto delivered = transmit(Direction::server_to_client, challenge, faulty);
    if (delivered && faulty && cfg_.reorder && chan_rng_.bernoulli(0.2)) {
      // Hold this challenge back; it arrives after the next one.
      ++report_.reorders;
      dirty_ = true;
      report_.events.emit("reorder", {{"type", std::string(to_string(delivered->type))}});
      delayed_.push_back(*delivered);
      delivered.reset();
    }
    std::optional<WireMessage> reply;
    if (delivered) reply = to_device(*delivered);
    if (!delayed_.empty() && delivered) {
      // Late arrival of an earlier challenge, after the current one.
      auto late = delayed_.front();
      delayed_.pop_front();
      to_device(late);
    }
    if (!reply) return finish(false);

    maybe_replay(Direction::client_to_server, faulty);
    auto response = transmit(Direction::client_to_server, *reply, faulty);
    if (!response) return finish(false);
    const bool accepted = to_server(*response);
    if (accepted && phase == Phase::authentication && !(server_sk_ == device_sk_)) {
      report_.invariant_held = false;
      report_.events.emit("session_key_mismatch");
    }
    return finish(accepted);
  }

  bool finish(bool accepted) {
    if (accepted) ++report_.accepted;
    if (!dirty_) {
      ++report_.clean_exchanges;
      if (!accepted) fail_clean("clean exchange rejected");
    }
    return accepted;
  }

  ChannelConfig cfg_;
  SeededRng rng_;
  SeededRng chan_rng_;
  ServerRecord record_;
  DeviceState device_;
  Pin server_pin_;
  Pin typed_pin_;
  SessionKey device_sk_;
  SessionKey server_sk_;
  std::vector<std::pair<Direction, WireMessage>> history_;
  std::deque<WireMessage> delayed_;
  bool dirty_ = false;
  RunReport report_;
  TimePoint now_ = TimePoint{std::chrono::seconds(1'700'000'000)};
};

}  // namespace detail

inline RunReport simulate_run(const ChannelConfig& cfg, std::uint64_t run_seed, int exchanges = 12) {
  return detail::Run(cfg, run_seed).run(exchanges);
}

struct CatchUpResult {
  bool accepted = false;
  bool keys_match = false;
  Counter distance = 0;  // catch-up distance the device saw on the authenticated exchange
};

/// An honest authentication after the server has run ahead by `d - 1` steps
/// through challenges that never reached the device.
inline CatchUpResult catch_up_exchange(std::uint64_t seed, Counter d) {
  if (d == 0) fail(Errc::invalid_argument, "distance must be at least 1");
  SeededRng rng(seed);
  auto setup = server::server_setup(rng);
  auto record = std::move(setup.record);
  auto dev = device::device_setup(std::move(setup.bundle.k), std::move(setup.bundle.st0),
                                  setup.bundle.client_id, rng);
  const Pin pin = Pin::nth(rng.uniform(10'000), 4);
  auto enrol = server::handle_hello_enrolment(record, rng, true);
  server::handle_enrol_response(record, device::handle_enrol_challenge(dev, enrol, pin, pin));

  // Each dropped authentication challenge moves the server 2 steps, a dropped
  // enrolment challenge 1 step.
  const Counter extra = d - 1;
  for (Counter i = 0; i < extra / 2; ++i) {
    (void)server::handle_hello_auth(record, make_transaction(1, "drop"), rng);
  }
  if (extra % 2 == 1) (void)server::handle_hello_enrolment(record, rng, true);

  CatchUpResult out;
  out.distance = record.ct + 1 - dev.ct;
  const auto t = make_transaction(42, "alice");
  auto ch = server::handle_hello_auth(record, t, rng);
  auto outcome = device::handle_auth_challenge(dev, ch.inner, ch.counter, pin, approve_all());
  auto verdict = server::verify_auth_response(record, outcome.response, Clock::now(),
                                              LockoutPolicy::disabled());
  out.accepted = verdict.accepted;
  out.keys_match = verdict.session_key && *verdict.session_key == outcome.session_key;
  return out;
}

}  // namespace fs2fa::sim
