#pragma once

// Security-game harness: client and server instances driven through
// Execute / Send / Reveal / Test / Corrupt, plus the transcript and event
// plumbing shared by the attack scripts and channel simulations.
//
// SID is SHA-256 over the instance's own ordered view of the exchange, so
// two instances are partners exactly when they saw the same bytes. PID is the
// peer's identity: the client id for a server instance, "server" for a client.

#include "fs2fa/codec.hpp"
#include "fs2fa/device.hpp"
#include "fs2fa/errors.hpp"
#include "fs2fa/policy.hpp"
#include "fs2fa/server.hpp"

#include <sodium.h>

#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace fs2fa {

enum class Direction : std::uint8_t { client_to_server = 0x01, server_to_client = 0x02 };

constexpr std::string_view to_string(Direction d) {
  return d == Direction::client_to_server ? "c2s" : "s2c";
}

struct TranscriptEntry {
  Direction direction;
  WireMessage message;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

/// Append-only record of the messages of one run.
class Transcript {
 public:
  void append(Direction d, WireMessage m) { entries_.push_back({d, std::move(m)}); }

  [[nodiscard]] const std::vector<TranscriptEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

  /// dir(1) | len(4) | envelope, for every entry in order.
  [[nodiscard]] Bytes bytes() const {
    Bytes out;
    for (const auto& e : entries_) {
      const Bytes env = codec::encode(e.message);
      out.push_back(static_cast<std::uint8_t>(e.direction));
      const auto n = static_cast<std::uint32_t>(env.size());
      out.push_back(static_cast<std::uint8_t>(n >> 24));
      out.push_back(static_cast<std::uint8_t>(n >> 16));
      out.push_back(static_cast<std::uint8_t>(n >> 8));
      out.push_back(static_cast<std::uint8_t>(n));
      fs2fa::append(out, env);
    }
    return out;
  }

  /// The transcript as the list of protocol items: hellos, each ciphertext and
  /// the response. The authentication challenge carries two ciphertexts in one
  /// envelope and contributes two items.
  [[nodiscard]] std::vector<Bytes> items() const {
    std::vector<Bytes> out;
    for (const auto& e : entries_) {
      if (e.message.type == MsgType::auth_challenge) {
        auto cts = codec::auth_challenge_ciphertexts(e.message);
        for (const auto* ct : {&cts.inner, &cts.counter}) {
          Bytes b;
          codec::append_ciphertext(b, *ct);
          out.push_back(std::move(b));
        }
      } else {
        out.push_back(codec::encode(e.message));
      }
    }
    return out;
  }

  friend bool operator==(const Transcript&, const Transcript&) = default;

 private:
  std::vector<TranscriptEntry> entries_;
};

inline Block32 session_id(const Transcript& t) {
  fs2fa::detail::ensure_sodium();
  const Bytes b = t.bytes();
  Block32 out{};
  crypto_hash_sha256(out.data(), b.data(), b.size());
  return out;
}

// ---------------------------------------------------------------------------
// Line-delimited event records: `event=<name> key=value ...`

class EventLog {
 public:
  void emit(std::string_view event,
            std::initializer_list<std::pair<std::string_view, std::string>> fields = {}) {
    std::ostringstream line;
    line << "event=" << event;
    for (const auto& [k, v] : fields) line << ' ' << k << '=' << v;
    lines_.push_back(line.str());
  }

  void message(Direction d, const WireMessage& m) {
    emit("message", {{"dir", std::string(to_string(d))},
                     {"type", std::string(to_string(m.type))},
                     {"bytes", std::to_string(codec::kHeaderBytes + m.payload.size())}});
  }

  [[nodiscard]] const std::vector<std::string>& lines() const noexcept { return lines_; }

  [[nodiscard]] std::string str() const {
    std::string out;
    for (const auto& l : lines_) {
      out += l;
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> lines_;
};

// ---------------------------------------------------------------------------
// Oracle game

enum class Role : std::uint8_t { client, server };
enum class Status : std::uint8_t { running, accepted, terminated };

constexpr std::string_view to_string(Status s) {
  switch (s) {
    case Status::running: return "running";
    case Status::accepted: return "accepted";
    case Status::terminated: return "terminated";
  }
  return "?";
}

struct InstanceRef {
  Role role;
  std::size_t index;

  friend bool operator==(const InstanceRef&, const InstanceRef&) = default;
};

struct Acceptance {
  SessionKey sk;
  Block32 sid{};
  std::string pid;
};

struct Instance {
  Role role = Role::client;
  std::size_t index = 0;
  Status status = Status::running;
  Transcript view;
  std::optional<Acceptance> accepted;
  std::optional<Errc> abort_reason;
  bool revealed = false;
  bool tested = false;
  std::optional<bool> test_coin;

  enum class Await : std::uint8_t { idle, enrol_challenge, enrol_response, auth_challenge, auth_response };
  Await await = Await::idle;
};

/// Start(phase): asks a client instance to open a phase.
struct Start {
  Phase phase;
};

using SendInput = std::variant<Start, WireMessage>;

struct SendResult {
  std::optional<WireMessage> reply;
  std::optional<Errc> abort;
};

struct GameConfig {
  std::uint64_t seed = 1;
  std::size_t pin_length = 4;
  std::optional<std::string> pin{};
  std::size_t verifier_len = kVerifierBytes;
  LockoutPolicy lockout = {};
  std::string transaction = "amount=120;payee=alice";
  /// Forces the Test coin. Unset means a fair coin from the game's rng.
  std::optional<bool> forced_coin{};
};

/// One client (with its token and PIN) and one server record, and any number
/// of client and server instances over them.
class Game {
 public:
  explicit Game(GameConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    auto setup = server::server_setup(rng_);
    record_ = std::move(setup.record);
    device_ = device::device_setup(std::move(setup.bundle.k), std::move(setup.bundle.st0),
                                   setup.bundle.client_id, rng_, cfg_.verifier_len);
    pin_ = cfg_.pin ? Pin::parse(*cfg_.pin)
                    : Pin::nth(rng_.uniform(pin_universe_size(cfg_.pin_length)), cfg_.pin_length);
  }

  InstanceRef new_client() { return add(Role::client); }
  InstanceRef new_server() { return add(Role::server); }

  [[nodiscard]] const Instance& instance(InstanceRef r) const { return list(r.role).at(r.index); }
  [[nodiscard]] const DeviceState& device() const noexcept { return device_; }
  [[nodiscard]] const ServerRecord& record() const noexcept { return record_; }
  [[nodiscard]] const ClientId& client_id() const noexcept { return device_.client_id; }
  [[nodiscard]] Rng& rng() noexcept { return rng_; }
  [[nodiscard]] EventLog& events() noexcept { return events_; }

  /// Replaces the PIN the client types from now on.
  void set_client_pin(Pin p) { pin_ = std::move(p); }
  void set_transaction(std::string t) { cfg_.transaction = std::move(t); }

  /// Active attack: deliver `in` to an instance and return its reply.
  SendResult send(InstanceRef ref, const SendInput& in) {
    auto& inst = mut(ref);
    if (inst.status != Status::running) fail(Errc::oracle_misuse, "instance is not running");
    try {
      return ref.role == Role::client ? client_step(inst, in) : server_step(inst, in);
    } catch (const ProtocolError& e) {
      inst.status = Status::terminated;
      inst.abort_reason = e.code();
      events_.emit("abort", {{"instance", label(ref)}, {"reason", std::string(to_string(e.code()))}});
      return {std::nullopt, e.code()};
    }
  }

  /// Passive attack: a full honest enrolment followed by an authentication
  /// between two fresh instances. Returns the messages as they crossed.
  Transcript execute(InstanceRef ci, InstanceRef sj) {
    if (ci.role != Role::client || sj.role != Role::server) {
      fail(Errc::oracle_misuse, "execute takes a client and a server instance");
    }
    for (auto r : {ci, sj}) {
      const auto& i = instance(r);
      if (i.status != Status::running || i.view.size() != 0) {
        fail(Errc::oracle_misuse, "execute requires fresh instances");
      }
    }
    Transcript t;
    auto relay = [&](InstanceRef to, const SendInput& in) -> WireMessage {
      auto r = send(to, in);
      if (r.abort) fail(*r.abort, "honest execution aborted");
      if (!r.reply) fail(Errc::unexpected_message, "honest execution stalled");
      t.append(to.role == Role::client ? Direction::client_to_server : Direction::server_to_client,
               *r.reply);
      return *r.reply;
    };
    auto hello_e = relay(ci, Start{Phase::enrolment});
    auto challenge_e = relay(sj, hello_e);
    auto response_e = relay(ci, challenge_e);
    if (auto r = send(sj, response_e); r.abort) fail(*r.abort, "honest enrolment rejected");
    auto hello_a = relay(ci, Start{Phase::authentication});
    auto challenge_a = relay(sj, hello_a);
    auto response_a = relay(ci, challenge_a);
    if (auto r = send(sj, response_a); r.abort) fail(*r.abort, "honest authentication rejected");
    if (instance(sj).status != Status::accepted) {
      fail(Errc::unexpected_message, "server did not accept honest execution");
    }
    return t;
  }

  SessionKey reveal(InstanceRef ref) {
    auto& inst = mut(ref);
    if (!inst.accepted) fail(Errc::oracle_misuse, "reveal on an instance that has not accepted");
    inst.revealed = true;
    events_.emit("reveal", {{"instance", label(ref)}});
    return inst.accepted->sk;
  }

  /// Fresh: accepted, not revealed, and no partner (same SID, other role) revealed.
  [[nodiscard]] bool fresh(InstanceRef ref) const {
    const auto& inst = instance(ref);
    if (!inst.accepted || inst.revealed) return false;
    const auto& peers = list(ref.role == Role::client ? Role::server : Role::client);
    for (const auto& p : peers) {
      if (p.accepted && p.accepted->sid == inst.accepted->sid && p.revealed) return false;
    }
    return true;
  }

  Block32 test(InstanceRef ref, std::optional<bool> force_coin = std::nullopt) {
    auto& inst = mut(ref);
    if (inst.tested) fail(Errc::oracle_misuse, "test already asked on this instance");
    if (!fresh(ref)) fail(Errc::oracle_misuse, "test on an instance that is not fresh");
    inst.tested = true;
    const bool b = force_coin.value_or(cfg_.forced_coin.value_or(rng_.bernoulli(0.5)));
    inst.test_coin = b;
    events_.emit("test", {{"instance", label(ref)}});
    if (b) return inst.accepted->sk.copy();
    return rng_.bytes<32>();
  }

  /// Corrupt(C, 1): the PIN.
  std::string corrupt_client_pin() {
    events_.emit("corrupt", {{"target", "client"}, {"factor", "1"}});
    return pin_.str();
  }

  /// Corrupt(C, 2): everything stored in the token.
  Bytes corrupt_client_device() {
    events_.emit("corrupt", {{"target", "client"}, {"factor", "2"}});
    return device::serialize(device_);
  }

  /// Corrupt(S): the server's record for this client.
  Bytes corrupt_server() {
    events_.emit("corrupt", {{"target", "server"}});
    return server::serialize(record_);
  }

  /// Lets tests advance the lockout clock.
  void advance_clock(std::chrono::seconds s) { now_ += s; }

 private:
  using Await = Instance::Await;

  InstanceRef add(Role role) {
    auto& l = list(role);
    Instance i;
    i.role = role;
    i.index = l.size();
    l.push_back(std::move(i));
    return {role, l.size() - 1};
  }

  std::vector<Instance>& list(Role r) { return r == Role::client ? clients_ : servers_; }
  [[nodiscard]] const std::vector<Instance>& list(Role r) const {
    return r == Role::client ? clients_ : servers_;
  }
  Instance& mut(InstanceRef r) { return list(r.role).at(r.index); }

  static std::string label(InstanceRef r) {
    return (r.role == Role::client ? "C" : "S") + std::to_string(r.index);
  }

  SendResult emit(Instance& inst, Direction d, WireMessage m) {
    inst.view.append(d, m);
    events_.message(d, m);
    return {std::move(m), std::nullopt};
  }

  SendResult client_step(Instance& inst, const SendInput& in) {
    if (const auto* s = std::get_if<Start>(&in)) {
      if (inst.await != Await::idle) fail(Errc::unexpected_message, "instance is mid-phase");
      inst.await = s->phase == Phase::enrolment ? Await::enrol_challenge : Await::auth_challenge;
      return emit(inst, Direction::client_to_server, codec::build_hello(device_.client_id, s->phase));
    }
    const auto& m = std::get<WireMessage>(in);
    if (inst.await == Await::enrol_challenge) {
      codec::expect_type(m, MsgType::enrol_challenge);
      inst.view.append(Direction::server_to_client, m);
      auto reply = device::respond_enrol(device_, m, [this] { return pin_; });
      inst.await = Await::idle;
      return emit(inst, Direction::client_to_server, std::move(reply));
    }
    if (inst.await == Await::auth_challenge) {
      codec::expect_type(m, MsgType::auth_challenge);
      inst.view.append(Direction::server_to_client, m);
      auto reply = device::respond_auth(device_, m, [this] { return pin_; }, approve_all());
      auto out = emit(inst, Direction::client_to_server, std::move(reply.message));
      inst.accepted = Acceptance{std::move(reply.outcome.session_key), session_id(inst.view), "server"};
      inst.status = Status::accepted;
      inst.await = Await::idle;
      events_.emit("accept", {{"instance", label({Role::client, inst.index})}});
      return out;
    }
    fail(Errc::unexpected_message, "client instance is not expecting a message");
  }

  SendResult server_step(Instance& inst, const SendInput& in) {
    if (std::holds_alternative<Start>(in)) fail(Errc::unexpected_message, "servers are not started");
    const auto& m = std::get<WireMessage>(in);
    switch (inst.await) {
      case Await::idle: {
        if (m.type == MsgType::hello_enrol) {
          inst.view.append(Direction::client_to_server, m);
          auto reply = server::on_hello_enrolment(record_, m, rng_, true);
          inst.await = Await::enrol_response;
          return emit(inst, Direction::server_to_client, std::move(reply));
        }
        codec::expect_type(m, MsgType::hello_auth);
        inst.view.append(Direction::client_to_server, m);
        auto reply = server::on_hello_auth(record_, m, TransactionDesc{cfg_.transaction}, rng_);
        inst.await = Await::auth_response;
        return emit(inst, Direction::server_to_client, std::move(reply));
      }
      case Await::enrol_response: {
        codec::expect_type(m, MsgType::enrol_response);
        inst.view.append(Direction::client_to_server, m);
        server::on_enrol_response(record_, m);
        inst.await = Await::idle;
        return {};
      }
      case Await::auth_response: {
        codec::expect_type(m, MsgType::auth_response);
        inst.view.append(Direction::client_to_server, m);
        auto verdict = server::on_auth_response(record_, m, now_, cfg_.lockout);
        inst.await = Await::idle;
        if (!verdict.accepted) {
          fail(verdict.locked ? Errc::locked_out : Errc::response_rejected,
               "authentication response rejected");
        }
        inst.accepted = Acceptance{std::move(*verdict.session_key), session_id(inst.view),
                                   record_.client_id.hex()};
        inst.status = Status::accepted;
        events_.emit("accept", {{"instance", label({Role::server, inst.index})}});
        return {};
      }
      default:
        fail(Errc::unexpected_message, "server instance is not expecting a message");
    }
  }

  GameConfig cfg_;
  SeededRng rng_;
  ServerRecord record_;
  DeviceState device_;
  Pin pin_;
  std::vector<Instance> clients_;
  std::vector<Instance> servers_;
  EventLog events_;
  TimePoint now_ = TimePoint{std::chrono::seconds(1'700'000'000)};
};

}  // namespace fs2fa
