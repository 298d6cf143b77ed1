// fs2fa: provisioning, enrolment and authentication demo, attack and scenario
// runners, and the cost bench.
//
// Exit codes: 0 expected outcome, 1 protocol failure, 2 usage error.

#include "fs2fa/fs2fa.hpp"

#include <CLI11.hpp>
#include <sodium.h>
#include <termios.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace {

using namespace fs2fa;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitProtocol = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::string device_state = "fs2fa-device.bin";
  std::string server_store = "fs2fa-server.bin";
  std::size_t pin_length = 4;
  std::optional<std::size_t> verifier_truncation;
  std::uint32_t lockout_threshold = 5;
  std::optional<std::uint64_t> seed;
  bool debug = false;
};

// ---------------------------------------------------------------------------
// Configuration: file < FS2FA_SEED < command line

std::optional<std::string> config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  if (!CLI::detail::lexical_cast(text, v)) throw UsageError("bad value for " + key + ": " + text);
  return v;
}

void load_config(const std::string& path, Settings& s) {
  if (!fs::exists(path)) throw UsageError("config file not found: " + path);
  CLI::ConfigTOML reader;
  for (const auto& item : reader.from_file(path)) {
    if (item.inputs.size() != 1) throw UsageError("config key needs one value: " + item.name);
    const auto& v = item.inputs.front();
    if (item.name == "device-state") {
      s.device_state = v;
    } else if (item.name == "server-store") {
      s.server_store = v;
    } else if (item.name == "pin-length") {
      s.pin_length = parse_number<std::size_t>(item.name, v);
    } else if (item.name == "verifier-truncation") {
      s.verifier_truncation = parse_number<std::size_t>(item.name, v);
    } else if (item.name == "lockout-threshold") {
      s.lockout_threshold = parse_number<std::uint32_t>(item.name, v);
    } else if (item.name == "seed") {
      s.seed = parse_number<std::uint64_t>(item.name, v);
    } else if (item.name == "debug") {
      s.debug = v == "true" || v == "1";
    } else {
      throw UsageError("unknown config key: " + item.name);
    }
  }
}

void validate(const Settings& s) {
  if (s.pin_length < kMinPinDigits || s.pin_length > kMaxPinDigits) {
    throw UsageError("pin-length must be 4..12");
  }
  if (s.verifier_truncation && (*s.verifier_truncation < kMinVerifierBytes || *s.verifier_truncation > kVerifierBytes)) {
    throw UsageError("verifier-truncation must be 4..32 bytes");
  }
  if (s.lockout_threshold == 0) throw UsageError("lockout-threshold must be at least 1");
}

/// Seeded runs mix the step's counter into the seed so separate invocations
/// do not replay one stream.
std::unique_ptr<Rng> make_rng(const Settings& s, std::uint64_t salt) {
  if (!s.seed) return std::make_unique<SystemRng>();
  return std::make_unique<SeededRng>(*s.seed ^ (salt * 0x9e3779b97f4a7c15ULL));
}

// ---------------------------------------------------------------------------
// Terminal I/O. Prompts go to stderr so stdout stays clean for QR lines.

class EchoOff {
 public:
  EchoOff() {
    if (::isatty(STDIN_FILENO) == 0) return;
    if (::tcgetattr(STDIN_FILENO, &saved_) != 0) return;
    termios quiet = saved_;
    quiet.c_lflag &= ~static_cast<tcflag_t>(ECHO);
    active_ = ::tcsetattr(STDIN_FILENO, TCSANOW, &quiet) == 0;
  }
  ~EchoOff() {
    if (active_) {
      ::tcsetattr(STDIN_FILENO, TCSANOW, &saved_);
      std::cerr << '\n';
    }
  }
  EchoOff(const EchoOff&) = delete;
  EchoOff& operator=(const EchoOff&) = delete;

 private:
  termios saved_{};
  bool active_ = false;
};

std::string read_line(const std::string& prompt) {
  std::cerr << prompt << std::flush;
  std::string line;
  if (!std::getline(std::cin, line)) fail(Errc::invalid_argument, "input closed");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

Pin read_pin(const Settings& s, const std::string& prompt) {
  for (int attempt = 0; attempt < 3; ++attempt) {
    std::string digits;
    {
      EchoOff quiet;
      digits = read_line(prompt);
    }
    const bool ok = digits.size() == s.pin_length &&
                    digits.find_first_not_of("0123456789") == std::string::npos;
    if (ok) {
      auto pin = Pin::parse(digits);
      zeroize(digits);
      return pin;
    }
    zeroize(digits);
    std::cerr << "PIN must be " << s.pin_length << " digits\n";
  }
  fail(Errc::invalid_argument, "no valid PIN entered");
}

device::PinSource enrol_prompt(const Settings& s) {
  auto calls = std::make_shared<int>(0);
  return [&s, calls] { return read_pin(s, (*calls)++ % 2 == 0 ? "PIN: " : "Confirm PIN: "); };
}

TransactionCheck interactive_approval() {
  return [](const TransactionDesc& t) {
    std::cerr << "Transaction: " << t.text() << '\n';
    for (;;) {
      const auto answer = read_line("Approve? [y/n] ");
      if (answer == "y" || answer == "Y" || answer == "yes") return true;
      if (answer == "n" || answer == "N" || answer == "no") return false;
    }
  };
}

std::string fingerprint(const SessionKey& sk) {
  Block32 h{};
  crypto_hash_sha256(h.data(), sk.expose().data(), sk.expose().size());
  return to_hex(ByteView(h).first(8));
}

std::string explain(Errc e) {
  switch (e) {
    case Errc::tampered_message: return "a message failed authentication (tampered or corrupted in transit)";
    case Errc::stale_challenge: return "the challenge is older than the device state (replayed or reordered)";
    case Errc::desync_too_large: return "the server is too far ahead of the device";
    case Errc::pin_entry_mismatch: return "the two PIN entries differ";
    case Errc::policy_rejected: return "the transaction was rejected on the device; no PIN was requested";
    case Errc::locked_out: return "the client is locked out after repeated wrong PINs; run `fs2fa unlock`";
    case Errc::not_enrolled: return "the client has not enrolled; run `fs2fa enroll`";
    case Errc::response_rejected: return "wrong PIN";
    case Errc::no_pending_exchange: return "the server has no exchange waiting for this message";
    case Errc::storage_error: return "a state file could not be read or written";
    default: return std::string(to_string(e));
  }
}

// ---------------------------------------------------------------------------
// State files

DeviceState load_device(const Settings& s) {
  if (!fs::exists(s.device_state)) {
    fail(Errc::storage_error, "no device state at " + s.device_state + "; run `fs2fa provision`");
  }
  auto bytes = read_file(s.device_state);
  auto dev = device::deserialize(bytes);
  zeroize(bytes);
  return dev;
}

void save_device(const Settings& s, const DeviceState& dev) {
  auto bytes = device::serialize(dev);
  write_file_atomic(s.device_state, bytes);
  zeroize(bytes);
}

void show_qr(const char* label, const WireMessage& m) {
  std::cerr << label << " " << to_string(m.type) << " [" << codec::encode(m).size() << " bytes]\n  "
            << codec::qr_encode(m) << '\n';
}

/// Runs a device step and saves whatever state it committed, abort or not.
template <class F>
auto device_step(const Settings& s, DeviceState& dev, F&& f) {
  try {
    auto r = f();
    save_device(s, dev);
    return r;
  } catch (const ProtocolError&) {
    save_device(s, dev);
    throw;
  }
}

template <class F>
auto server_step(const Settings& s, RecordStore& store, const ClientId& id, F&& f) {
  return store.update(id, [&](ServerRecord& r) {
    auto rng = make_rng(s, r.ct + 1);
    return f(r, *rng);
  });
}

void flip_bit(WireMessage& m, std::size_t byte) { m.payload.at(byte) ^= 0x01; }

// ---------------------------------------------------------------------------
// Commands

int cmd_provision(const Settings& s, bool force) {
  const bool dev_exists = fs::exists(s.device_state);
  if (dev_exists && !force) {
    std::cerr << "error: " << s.device_state << " exists; use --force to replace it\n";
    return kExitProtocol;
  }
  if (force) {
    fs::remove(s.device_state);
    fs::remove(s.server_store);
  }
  auto rng = make_rng(s, 0);
  auto setup = server::server_setup(*rng);
  auto dev = device::device_setup(std::move(setup.bundle.k), std::move(setup.bundle.st0),
                                  setup.bundle.client_id, *rng,
                                  s.verifier_truncation.value_or(kVerifierBytes));
  RecordStore store(s.server_store);
  store.insert(std::move(setup.record));
  save_device(s, dev);
  std::cout << "provisioned client " << dev.client_id.hex() << '\n';
  return kExitOk;
}

int cmd_enroll(const Settings& s, const std::string& tamper, bool show) {
  auto dev = load_device(s);
  RecordStore store(s.server_store);
  const auto id = dev.client_id;

  const auto hello = codec::build_hello(id, Phase::enrolment);
  if (show) show_qr("device -> server", hello);
  // The operator running this command stands in for the authenticated channel.
  auto challenge = server_step(s, store, id, [&](ServerRecord& r, Rng& rng) {
    return server::on_hello_enrolment(r, hello, rng, true);
  });
  if (tamper == "flip") {
    flip_bit(challenge, 5);
    std::cerr << "channel: flipped one bit of the challenge\n";
  }
  if (show) show_qr("server -> device", challenge);

  std::optional<WireMessage> reply;
  for (int attempt = 0; !reply; ++attempt) {
    try {
      reply = device_step(s, dev, [&] { return device::respond_enrol(dev, challenge, enrol_prompt(s)); });
    } catch (const ProtocolError& e) {
      if (e.code() != Errc::pin_entry_mismatch || attempt == 2) throw;
      std::cerr << "PIN entries differ; try again\n";
    }
  }
  if (tamper == "stale") {
    std::cerr << "channel: response dropped; replaying the challenge\n";
    (void)device_step(s, dev, [&] { return device::respond_enrol(dev, challenge, enrol_prompt(s)); });
  }
  if (show) show_qr("device -> server", *reply);
  server_step(s, store, id, [&](ServerRecord& r, Rng&) {
    server::on_enrol_response(r, *reply);
    return 0;
  });
  std::cout << "enrolled\n";
  return kExitOk;
}

void print_verdict(const Settings& s, const server::AuthVerdict& v, const ServerRecord& r,
                   const std::optional<SessionKey>& device_sk) {
  if (v.accepted) {
    std::cout << "accepted\n";
    if (s.debug) {
      std::cout << "session key fingerprint (server): " << fingerprint(*v.session_key) << '\n';
      if (device_sk) std::cout << "session key fingerprint (device): " << fingerprint(*device_sk) << '\n';
    }
    return;
  }
  if (v.locked) {
    std::cout << "rejected: wrong PIN; the client is now locked out\n";
  } else {
    std::cout << "rejected: wrong PIN (" << r.lockout.failures << " of " << s.lockout_threshold
              << " allowed failures used)\n";
  }
}

int cmd_auth(const Settings& s, std::uint64_t amount, const std::string& payee, const std::string& tamper,
             bool show) {
  auto dev = load_device(s);
  RecordStore store(s.server_store);
  const auto id = dev.client_id;
  const auto t = make_transaction(amount, payee);

  const auto hello = codec::build_hello(id, Phase::authentication);
  if (show) show_qr("device -> server", hello);
  auto challenge = server_step(s, store, id, [&](ServerRecord& r, Rng& rng) {
    return server::on_hello_auth(r, hello, t, rng);
  });
  if (tamper == "flip") {
    flip_bit(challenge, 2 + 3);  // inside the transaction ciphertext
    std::cerr << "channel: flipped one bit of the challenge\n";
  }
  if (show) show_qr("server -> device", challenge);

  auto reply = device_step(s, dev, [&] {
    return device::respond_auth(dev, challenge, [&] { return read_pin(s, "PIN: "); }, interactive_approval());
  });
  if (show) show_qr("device -> server", reply.message);
  const LockoutPolicy policy{s.lockout_threshold, std::chrono::minutes(15)};
  const auto verdict = server_step(s, store, id, [&](ServerRecord& r, Rng&) {
    return server::on_auth_response(r, reply.message, Clock::now(), policy);
  });
  print_verdict(s, verdict, store.get(id), reply.outcome.session_key);
  return verdict.accepted ? kExitOk : kExitProtocol;
}

int cmd_inspect(const Settings& s) {
  if (fs::exists(s.device_state)) {
    const auto dev = load_device(s);
    std::cout << "device " << s.device_state << "\n"
              << "  client id     " << dev.client_id.hex() << "\n"
              << "  counter       " << dev.ct << "\n"
              << "  generator     epoch " << dev.st.epoch() << "\n"
              << "  holds         k, st, ct, sa (no PIN, no verifier)\n"
              << "  verifier len  " << int{dev.verifier_len} << " bytes\n";
  }
  if (fs::exists(s.server_store)) {
    RecordStore store(s.server_store);
    for (const auto& id : store.ids()) {
      const auto r = store.get(id);
      std::cout << "server record " << id.hex() << "\n"
                << "  counter       " << r.ct << "\n"
                << "  generator     epoch " << r.st.epoch() << "\n"
                << "  verifier      " << (r.verifier ? std::to_string(r.verifier->size()) + " bytes" : "none")
                << "\n"
                << "  pending       " << (r.pending ? std::string(to_string(r.pending->phase)) : "none") << "\n"
                << "  failures      " << r.lockout.failures << (r.lockout.locked ? " (locked)" : "") << "\n"
                << "  holds         k, st, ct, v (no sa)\n";
    }
  }
  return kExitOk;
}

int cmd_unlock(const Settings& s, const std::string& client) {
  RecordStore store(s.server_store);
  const auto id = client.empty() ? load_device(s).client_id : ClientId::from_hex(client);
  store.update(id, [](ServerRecord& r) { server::admin_unlock(r); });
  std::cout << "unlocked " << id.hex() << '\n';
  return kExitOk;
}

int cmd_attack(const Settings& s, const std::string& name) {
  const auto seed = s.seed.value_or(1);
  if (name == "s2-bruteforce") {
    attacks::BruteForceResult r;
    const auto rep = attacks::strawman2_offline(seed, &r);
    std::cout << rep.events.str();
    std::cout << r.candidates.size() << " of " << r.universe << " candidates remain\n";
    if (rep.adversary_succeeded) std::cout << "unique PIN recovered: " << r.candidate(0) << '\n';
    return rep.adversary_succeeded ? kExitOk : kExitProtocol;
  }
  if (name == "main-bruteforce") {
    attacks::BruteForceResult r;
    const auto rep = attacks::main_offline(seed, &r);
    std::cout << rep.events.str();
    std::cout << r.candidates.size() << " of " << r.universe << " candidates remain\n";
    return rep.adversary_succeeded ? kExitProtocol : kExitOk;
  }
  if (name == "replay") {
    const auto rep = attacks::main_replay(seed);
    std::cout << rep.events.str();
    std::cout << "replayed response " << (rep.adversary_succeeded ? "accepted" : "rejected") << '\n';
    return rep.adversary_succeeded ? kExitProtocol : kExitOk;
  }
  if (name == "preplay-s1") {
    const auto rep = attacks::strawman1_preplay(seed);
    std::cout << rep.events.str();
    std::cout << "stolen strawman I key " << (rep.adversary_succeeded ? "forges" : "does not forge")
              << " responses\n";
    return rep.adversary_succeeded ? kExitOk : kExitProtocol;
  }
  throw UsageError("unknown attack: " + name);
}

int cmd_scenario(const Settings& s, const std::string& which) {
  int id = 0;
  try {
    id = scenarios::parse_id(which);
  } catch (const ProtocolError& e) {
    throw UsageError(e.what());
  }
  const auto r = scenarios::run_scenario(id, s.seed.value_or(1));
  std::cout << r.events.str();
  return r.adversary_succeeded ? kExitProtocol : kExitOk;
}

int cmd_bench(const Settings& s, bool csv) {
  const auto seed = s.seed.value_or(1);
  if (csv) {
    std::cout << costbench::comparison_csv(seed);
    return kExitOk;
  }
  const auto comm = costbench::comm_cost_published();
  std::cout << "communication (published accounting)\n";
  for (const auto& i : comm.items) {
    std::printf("  %-15s %-7s %-28s %5llu bits\n", i.phase.c_str(), i.sender.c_str(), i.message.c_str(),
                static_cast<unsigned long long>(i.bits));
  }
  std::printf("  total %llu bits\n", static_cast<unsigned long long>(comm.total()));

  Game g({.seed = seed});
  auto c = g.new_client();
  auto sv = g.new_server();
  const auto actual = costbench::comm_cost_actual(g.execute(c, sv));
  std::printf("\nwire bytes (this encoding)\n  client->server %llu, server->client %llu, total %llu\n",
              static_cast<unsigned long long>(actual.client_to_server),
              static_cast<unsigned long long>(actual.server_to_client),
              static_cast<unsigned long long>(actual.total()));

  const auto ops = costbench::op_counts(seed).total();
  std::printf("\noperations per enrolment + authentication\n"
              "  AE %llu, PRF %llu (of which verifier %llu), Update %llu, modexp %llu\n"
              "  published rollup %llu, all-PRF rollup %llu\n\n",
              static_cast<unsigned long long>(ops.ae()), static_cast<unsigned long long>(ops.prf),
              static_cast<unsigned long long>(ops.verifier), static_cast<unsigned long long>(ops.update),
              static_cast<unsigned long long>(ops.modexp),
              static_cast<unsigned long long>(ops.published_rollup()),
              static_cast<unsigned long long>(ops.all_prf_rollup()));
  std::cout << costbench::comparison_table(seed);
  return kExitOk;
}

// Split roles: each side is a separate invocation; messages cross as base64 lines.

WireMessage read_qr(const std::string& qr) {
  return codec::qr_decode(qr.empty() ? read_line("") : qr);
}

int cmd_device_hello(const Settings& s, const std::string& phase) {
  const auto dev = load_device(s);
  if (phase != "enrol" && phase != "auth") throw UsageError("phase must be enrol or auth");
  std::cout << codec::qr_encode(codec::build_hello(dev.client_id, phase == "enrol" ? Phase::enrolment
                                                                                  : Phase::authentication))
            << '\n';
  return kExitOk;
}

int cmd_device_handle(const Settings& s, const std::string& qr) {
  auto dev = load_device(s);
  const auto m = read_qr(qr);
  if (m.type == MsgType::enrol_challenge) {
    std::optional<WireMessage> reply;
    for (int attempt = 0; !reply; ++attempt) {
      try {
        reply = device_step(s, dev, [&] { return device::respond_enrol(dev, m, enrol_prompt(s)); });
      } catch (const ProtocolError& e) {
        if (e.code() != Errc::pin_entry_mismatch || attempt == 2) throw;
        std::cerr << "PIN entries differ; try again\n";
      }
    }
    std::cout << codec::qr_encode(*reply) << '\n';
    return kExitOk;
  }
  if (m.type == MsgType::auth_challenge) {
    auto reply = device_step(s, dev, [&] {
      return device::respond_auth(dev, m, [&] { return read_pin(s, "PIN: "); }, interactive_approval());
    });
    std::cout << codec::qr_encode(reply.message) << '\n';
    if (s.debug) std::cerr << "session key fingerprint (device): " << fingerprint(reply.outcome.session_key) << '\n';
    return kExitOk;
  }
  fail(Errc::unexpected_message, "the device only handles challenges");
}

int cmd_server_handle(const Settings& s, const std::string& qr, std::optional<std::uint64_t> amount,
                      const std::string& payee) {
  RecordStore store(s.server_store);
  const auto m = read_qr(qr);
  const LockoutPolicy policy{s.lockout_threshold, std::chrono::minutes(15)};
  switch (m.type) {
    case MsgType::hello_enrol: {
      auto ch = server_step(s, store, m.client_id, [&](ServerRecord& r, Rng& rng) {
        return server::on_hello_enrolment(r, m, rng, true);
      });
      std::cout << codec::qr_encode(ch) << '\n';
      return kExitOk;
    }
    case MsgType::enrol_response:
      server_step(s, store, m.client_id, [&](ServerRecord& r, Rng&) {
        server::on_enrol_response(r, m);
        return 0;
      });
      std::cout << "enrolled\n";
      return kExitOk;
    case MsgType::hello_auth: {
      if (!amount || payee.empty()) throw UsageError("an authentication hello needs --amount and --payee");
      const auto t = make_transaction(*amount, payee);
      auto ch = server_step(s, store, m.client_id, [&](ServerRecord& r, Rng& rng) {
        return server::on_hello_auth(r, m, t, rng);
      });
      std::cout << codec::qr_encode(ch) << '\n';
      return kExitOk;
    }
    case MsgType::auth_response: {
      const auto v = server_step(s, store, m.client_id, [&](ServerRecord& r, Rng&) {
        return server::on_auth_response(r, m, Clock::now(), policy);
      });
      print_verdict(s, v, store.get(m.client_id), std::nullopt);
      return v.accepted ? kExitOk : kExitProtocol;
    }
    default:
      fail(Errc::unexpected_message, "the server only handles hellos and responses");
  }
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  try {
    if (auto path = config_path(argc, argv)) load_config(*path, s);
    if (const char* env = std::getenv("FS2FA_SEED")) s.seed = parse_number<std::uint64_t>("FS2FA_SEED", env);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App app{"Two-factor authentication with a forward-secure token"};
  app.require_subcommand(1);
  app.fallthrough();  // subcommands inherit: global options may follow the subcommand
  std::string config_file;
  app.add_option("--config", config_file, "key=value settings file (keys as the long options)");
  app.add_option("--device-state,--device", s.device_state, "device state file")->capture_default_str();
  app.add_option("--server-store,--store", s.server_store, "server record store")->capture_default_str();
  app.add_option("--pin-length", s.pin_length, "PIN digits")->capture_default_str();
  app.add_option("--verifier-truncation", s.verifier_truncation, "verifier bytes (4..32) at provisioning");
  app.add_option("--lockout-threshold", s.lockout_threshold, "wrong PINs before lockout")->capture_default_str();
  app.add_option("--seed", s.seed, "deterministic randomness (also FS2FA_SEED); demos only");
  app.add_flag("--debug", s.debug, "print session-key fingerprints");

  bool force = false;
  auto* provision = app.add_subcommand("provision", "create a device and its server record");
  provision->add_flag("--force", force, "replace existing state files");

  std::string tamper = "none";
  bool show = false;
  auto* enroll = app.add_subcommand("enroll", "enrol a PIN (prompts twice)");
  enroll->add_option("--channel-tamper", tamper, "none | flip | stale")
      ->check(CLI::IsMember({"none", "flip", "stale"}));
  enroll->add_flag("--show-qr", show, "print each message as it would be scanned");

  std::uint64_t amount = 0;
  std::string payee;
  auto* auth = app.add_subcommand("auth", "authorise a transaction");
  auth->add_option("--amount", amount, "transaction amount")->required();
  auth->add_option("--payee", payee, "transaction payee")->required();
  auth->add_option("--channel-tamper", tamper, "none | flip")->check(CLI::IsMember({"none", "flip"}));
  auth->add_flag("--show-qr", show, "print each message as it would be scanned");

  auto* inspect = app.add_subcommand("inspect", "show counters and what each side stores");

  std::string client;
  auto* unlock = app.add_subcommand("unlock", "clear a lockout");
  unlock->add_option("--client", client, "client id (defaults to the local device)");

  std::string attack_name;
  auto* attack = app.add_subcommand("attack", "run an attack script; exit 0 iff the expected outcome holds");
  attack->add_option("name", attack_name, "s2-bruteforce | main-bruteforce | replay | preplay-s1")->required();

  std::string scenario_id;
  auto* scenario = app.add_subcommand("scenario", "run a threat scenario; exit 0 iff the adversary fails");
  scenario->add_option("id", scenario_id, "1..5 or scenario name")->required();

  bool csv = false;
  auto* bench = app.add_subcommand("bench", "communication and operation costs");
  bench->add_flag("--csv", csv, "comparison table as CSV");

  std::string phase;
  std::string qr;
  std::optional<std::uint64_t> split_amount;
  auto* dev_cmd = app.add_subcommand("device", "device side of a split-role run");
  dev_cmd->require_subcommand(1);
  auto* dev_hello = dev_cmd->add_subcommand("hello", "print a hello line");
  dev_hello->add_option("--phase", phase, "enrol | auth")->required();
  auto* dev_handle = dev_cmd->add_subcommand("handle", "answer a challenge line");
  dev_handle->add_option("--qr", qr, "message line (read from stdin if omitted)");

  auto* srv_cmd = app.add_subcommand("server", "server side of a split-role run");
  srv_cmd->require_subcommand(1);
  auto* srv_handle = srv_cmd->add_subcommand("handle", "process a hello or response line");
  srv_handle->add_option("--qr", qr, "message line (read from stdin if omitted)");
  srv_handle->add_option("--amount", split_amount, "transaction amount for an authentication hello");
  srv_handle->add_option("--payee", payee, "transaction payee for an authentication hello");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return kExitUsage;
  }

  try {
    validate(s);
    if (*provision) return cmd_provision(s, force);
    if (*enroll) return cmd_enroll(s, tamper, show);
    if (*auth) return cmd_auth(s, amount, payee, tamper, show);
    if (*inspect) return cmd_inspect(s);
    if (*unlock) return cmd_unlock(s, client);
    if (*attack) return cmd_attack(s, attack_name);
    if (*scenario) return cmd_scenario(s, scenario_id);
    if (*bench) return cmd_bench(s, csv);
    if (*dev_hello) return cmd_device_hello(s, phase);
    if (*dev_handle) return cmd_device_handle(s, qr);
    if (*srv_handle) return cmd_server_handle(s, qr, split_amount, payee);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ProtocolError& e) {
    std::cerr << "aborted: " << explain(e.code()) << " [" << e.what() << "]\n";
    return kExitProtocol;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitProtocol;
  }
  return kExitUsage;
}
