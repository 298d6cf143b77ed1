#include "fs2fa/device.hpp"
#include "fs2fa/harness.hpp"
#include "fs2fa/server.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <string>

namespace fs2fa {
namespace {

using testing::vec;

struct Pair {
  ServerRecord record;
  DeviceState dev;
};

Pair provision(Rng& rng, std::size_t verifier_len = kVerifierBytes) {
  auto setup = server::server_setup(rng);
  Pair p{std::move(setup.record), {}};
  p.dev = device::device_setup(std::move(setup.bundle.k), std::move(setup.bundle.st0),
                               setup.bundle.client_id, rng, verifier_len);
  return p;
}

void enrol(Pair& p, Rng& rng, const Pin& pin) {
  auto ch = server::handle_hello_enrolment(p.record, rng, true);
  server::handle_enrol_response(p.record, device::handle_enrol_challenge(p.dev, ch, pin, pin));
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ProtocolError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no ProtocolError";
  return Errc::oracle_misuse;
}

const Pin kPin = Pin::parse("4821");

TEST(DeviceSetup, StartsAtZeroWithFreshSa) {
  SeededRng rng(1);
  auto setup = server::server_setup(rng);
  auto a = device::device_setup(setup.bundle.k, setup.bundle.st0, setup.bundle.client_id, rng);
  auto b = device::device_setup(setup.bundle.k, setup.bundle.st0, setup.bundle.client_id, rng);
  EXPECT_EQ(a.ct, 0u);
  EXPECT_EQ(a.st.epoch(), 0u);
  EXPECT_EQ(a.client_id, setup.bundle.client_id);
  EXPECT_FALSE(a.sa == b.sa);
}

TEST(DeviceSetup, RejectsNonGenesisState) {
  SeededRng rng(2);
  auto setup = server::server_setup(rng);
  auto advanced = crypto::update(setup.bundle.st0, 1).state;
  EXPECT_EQ(code_of([&] { device::device_setup(setup.bundle.k, advanced, setup.bundle.client_id, rng); }),
            Errc::invalid_argument);
  EXPECT_EQ(code_of([&] { device::device_setup(setup.bundle.k, setup.bundle.st0, setup.bundle.client_id, rng, 3); }),
            Errc::invalid_argument);
}

TEST(Verifier, FrozenVectors) {
  const PrfKey sa{ByteView(vec("verifier.sa"))};
  EXPECT_EQ(to_hex(device::compute_verifier(sa, Pin::parse("0000")).expose()), to_hex(vec("verifier.pin0000")));
  EXPECT_EQ(to_hex(device::compute_verifier(sa, Pin::parse("4821")).expose()), to_hex(vec("verifier.pin4821")));
  const auto t8 = device::compute_verifier(sa, Pin::parse("4821"), 8);
  EXPECT_EQ(to_hex(t8.expose()), to_hex(ByteView(vec("verifier.pin4821")).first(8)));
}

TEST(Verifier, UntruncatedDistinctOverUniverse) {
  SeededRng rng(3);
  const auto sa = crypto::prf_keygen(rng);
  std::set<std::string> seen;
  for (std::uint64_t i = 0; i < 10'000; ++i) {
    seen.insert(to_hex(device::compute_verifier(sa, Pin::nth(i, 4)).expose()));
  }
  EXPECT_EQ(seen.size(), 10'000u);
}

// 10,000 PINs into 2^16 buckets: collisions are certain in practice (expected ~700).
TEST(Verifier, TwoByteTruncationCollides) {
  SeededRng rng(4);
  const auto sa = crypto::prf_keygen(rng);
  std::set<std::string> seen;
  for (std::uint64_t i = 0; i < 10'000; ++i) {
    seen.insert(to_hex(device::compute_verifier(sa, Pin::nth(i, 4), 2).expose()));
  }
  const auto collisions = 10'000 - seen.size();
  EXPECT_GT(collisions, 300u);
  EXPECT_LT(collisions, 1200u);
}

TEST(PinMatch, Basics) {
  EXPECT_TRUE(device::check_pin_match(Pin::parse("1234"), Pin::parse("1234")));
  EXPECT_FALSE(device::check_pin_match(Pin::parse("1234"), Pin::parse("1243")));
  EXPECT_FALSE(device::check_pin_match(Pin::parse("1234"), Pin::parse("12345")));
}

TEST(Pin, Validation) {
  EXPECT_THROW(Pin::parse("123"), ProtocolError);
  EXPECT_THROW(Pin::parse("1234567890123"), ProtocolError);
  EXPECT_THROW(Pin::parse("12a4"), ProtocolError);
  EXPECT_EQ(Pin::nth(7, 4).str(), "0007");
  EXPECT_EQ(Pin::nth(9999, 4).str(), "9999");
}

TEST(Enrol, HonestFlowStoresVerifier) {
  SeededRng rng(5);
  auto p = provision(rng);
  StepTrace trace;
  auto ch = server::handle_hello_enrolment(p.record, rng, true);
  auto reply = device::handle_enrol_challenge(p.dev, ch, kPin, kPin, &trace);
  server::handle_enrol_response(p.record, reply);
  ASSERT_TRUE(p.record.verifier);
  EXPECT_EQ(*p.record.verifier, device::compute_verifier(p.dev.sa, kPin));
  EXPECT_EQ(p.dev.ct, 1u);
  EXPECT_EQ(p.dev.st.epoch(), 1u);
  EXPECT_EQ(p.dev.st, p.record.st);
  EXPECT_EQ(trace.pin_prompts, 2);
  const std::vector<std::string> discarded{"PIN", "v", "kt1", "N"};
  EXPECT_EQ(trace.discarded, discarded);
}

TEST(Enrol, StaleChallengeRejected) {
  SeededRng rng(6);
  auto p = provision(rng);
  auto ch = server::handle_hello_enrolment(p.record, rng, true);
  (void)device::handle_enrol_challenge(p.dev, ch, kPin, kPin);
  const auto before = p.dev;
  EXPECT_EQ(code_of([&] { device::handle_enrol_challenge(p.dev, ch, kPin, kPin); }),
            Errc::stale_challenge);
  EXPECT_EQ(p.dev, before);
}

TEST(Enrol, EveryBitFlipIsTamperAndNoPrompt) {
  SeededRng rng(7);
  auto p = provision(rng);
  const auto ch = server::handle_hello_enrolment(p.record, rng, true);
  const auto before = p.dev;
  int prompts = 0;
  const device::PinSource prompt = [&] {
    ++prompts;
    return kPin;
  };
  for (std::size_t bit = 0; bit < (ch.body.size() + 32) * 8; ++bit) {
    auto bad = ch;
    const auto mask = static_cast<std::uint8_t>(1u << (bit % 8));
    if (bit / 8 < bad.body.size()) {
      bad.body[bit / 8] ^= mask;
    } else {
      bad.tag[bit / 8 - bad.body.size()] ^= mask;
    }
    EXPECT_EQ(code_of([&] { device::handle_enrol_challenge(p.dev, bad, prompt); }),
              Errc::tampered_message);
  }
  EXPECT_EQ(prompts, 0);
  EXPECT_EQ(p.dev, before);
}

TEST(Enrol, PinMismatchLeavesStateUntouched) {
  SeededRng rng(8);
  auto p = provision(rng);
  const auto ch = server::handle_hello_enrolment(p.record, rng, true);
  const auto before = p.dev;
  EXPECT_EQ(code_of([&] { device::handle_enrol_challenge(p.dev, ch, kPin, Pin::parse("4822")); }),
            Errc::pin_entry_mismatch);
  EXPECT_EQ(p.dev, before);
  // The same challenge still works once the entries agree.
  auto reply = device::handle_enrol_challenge(p.dev, ch, kPin, kPin);
  EXPECT_NO_THROW(server::handle_enrol_response(p.record, reply));
}

TEST(Enrol, DesyncTooLargeBeforePrompt) {
  SeededRng rng(9);
  auto p = provision(rng);
  // Forge a far-ahead challenge under the shared k (as a server that ran ahead would).
  Bytes plain = codec::encode_enrol_challenge_plain(fresh_nonce(rng), crypto::kMaxUpdateDistance + 1);
  const auto ch = crypto::ae_encrypt(p.record.k, plain);
  int prompts = 0;
  EXPECT_EQ(code_of([&] {
              device::handle_enrol_challenge(p.dev, ch, [&] {
                ++prompts;
                return kPin;
              });
            }),
            Errc::desync_too_large);
  EXPECT_EQ(prompts, 0);
}

TEST(Enrol, CatchUpAcrossDroppedChallenges) {
  for (std::uint64_t d = 1; d <= 64; ++d) {
    SeededRng rng(1000 + d);
    auto p = provision(rng);
    for (std::uint64_t i = 1; i < d; ++i) (void)server::handle_hello_enrolment(p.record, rng, true);
    auto ch = server::handle_hello_enrolment(p.record, rng, true);
    StepTrace trace;
    auto reply = device::handle_enrol_challenge(p.dev, ch, kPin, kPin, &trace);
    ASSERT_NO_THROW(server::handle_enrol_response(p.record, reply)) << d;
    EXPECT_EQ(p.dev.ct, d);
    EXPECT_EQ(p.dev.st, p.record.st);
  }
}

TEST(Enrol, NoPinAtRest) {
  auto run = [](const char* pin) {
    SeededRng rng(10);
    auto p = provision(rng);
    enrol(p, rng, Pin::parse(pin));
    return device::serialize(p.dev);
  };
  EXPECT_EQ(run("0000"), run("9876"));
}

TEST(Auth, HonestFlowAgreesWithServer) {
  SeededRng rng(11);
  auto p = provision(rng);
  enrol(p, rng, kPin);
  StepTrace dev_trace;
  StepTrace srv_trace;
  const auto t = make_transaction(120, "alice");
  auto ch = server::handle_hello_auth(p.record, t, rng, &srv_trace);
  auto out = device::handle_auth_challenge(p.dev, ch.inner, ch.counter, kPin, approve_all(), &dev_trace);
  auto verdict = server::verify_auth_response(p.record, out.response, Clock::now());
  ASSERT_TRUE(verdict.accepted);
  EXPECT_EQ(*verdict.session_key, out.session_key);
  EXPECT_NE(out.response, out.session_key.copy());
  EXPECT_EQ(out.transaction, t);
  EXPECT_EQ(dev_trace.derived_keys.at("kt2"), srv_trace.derived_keys.at("kt2"));
  EXPECT_EQ(dev_trace.derived_keys.at("kt3"), srv_trace.derived_keys.at("kt3"));
  EXPECT_EQ(p.dev.ct, 3u);
  EXPECT_EQ(p.record.ct, 3u);
  const std::vector<std::string> discarded{"PIN", "v", "kt2", "kt3", "N", "t"};
  EXPECT_EQ(dev_trace.discarded, discarded);
}

TEST(Auth, WrongPinStillResponds) {
  SeededRng rng(12);
  auto p = provision(rng);
  enrol(p, rng, kPin);
  auto ch = server::handle_hello_auth(p.record, make_transaction(1, "alice"), rng);
  auto out = device::handle_auth_challenge(p.dev, ch.inner, ch.counter, Pin::parse("0000"), approve_all());
  EXPECT_FALSE(server::verify_auth_response(p.record, out.response, Clock::now()).accepted);
}

TEST(Auth, TamperedInnerAbortsBeforePrompt) {
  SeededRng rng(13);
  auto p = provision(rng);
  enrol(p, rng, kPin);
  auto ch = server::handle_hello_auth(p.record, make_transaction(5, "alice"), rng);
  ch.inner.body[3] ^= 0x20;
  int prompts = 0;
  EXPECT_EQ(code_of([&] {
              device::handle_auth_challenge(p.dev, ch.inner, ch.counter, [&] {
                ++prompts;
                return kPin;
              }, approve_all());
            }),
            Errc::tampered_message);
  EXPECT_EQ(prompts, 0);
  // The counter ciphertext authenticated, so catch-up to tmp_ct was kept.
  EXPECT_EQ(p.dev.ct, p.record.ct - 1);
  EXPECT_EQ(p.dev.ct, p.dev.st.epoch());
}

TEST(Auth, TamperedCounterAbortsWithoutProgress) {
  SeededRng rng(14);
  auto p = provision(rng);
  enrol(p, rng, kPin);
  auto ch = server::handle_hello_auth(p.record, make_transaction(5, "alice"), rng);
  ch.counter.tag[0] ^= 1;
  const auto before = p.dev;
  EXPECT_EQ(code_of([&] { device::handle_auth_challenge(p.dev, ch.inner, ch.counter, kPin, approve_all()); }),
            Errc::tampered_message);
  EXPECT_EQ(p.dev, before);
}

TEST(Auth, PolicyRejectionAborts) {
  SeededRng rng(15);
  auto p = provision(rng);
  enrol(p, rng, kPin);
  Policy policy{100, {"alice"}};
  auto ch = server::handle_hello_auth(p.record, make_transaction(500, "alice"), rng);
  EXPECT_EQ(code_of([&] { device::handle_auth_challenge(p.dev, ch.inner, ch.counter, kPin, policy_check(policy)); }),
            Errc::policy_rejected);
  auto ok = server::handle_hello_auth(p.record, make_transaction(50, "alice"), rng);
  EXPECT_NO_THROW(device::handle_auth_challenge(p.dev, ok.inner, ok.counter, kPin, policy_check(policy)));
}

TEST(Auth, StaleChallengeRejected) {
  SeededRng rng(16);
  auto p = provision(rng);
  enrol(p, rng, kPin);
  auto ch = server::handle_hello_auth(p.record, make_transaction(5, "alice"), rng);
  (void)device::handle_auth_challenge(p.dev, ch.inner, ch.counter, kPin, approve_all());
  EXPECT_EQ(code_of([&] { device::handle_auth_challenge(p.dev, ch.inner, ch.counter, kPin, approve_all()); }),
            Errc::stale_challenge);
}

TEST(Auth, CatchUpAcrossDroppedChallenges) {
  for (std::uint64_t drops = 0; drops < 32; ++drops) {
    SeededRng rng(2000 + drops);
    auto p = provision(rng);
    enrol(p, rng, kPin);
    for (std::uint64_t i = 0; i < drops; ++i) {
      (void)server::handle_hello_auth(p.record, make_transaction(1, "x"), rng);
    }
    auto ch = server::handle_hello_auth(p.record, make_transaction(2, "alice"), rng);
    auto out = device::handle_auth_challenge(p.dev, ch.inner, ch.counter, kPin, approve_all());
    auto verdict = server::verify_auth_response(p.record, out.response, Clock::now(), LockoutPolicy::disabled());
    ASSERT_TRUE(verdict.accepted) << drops;
    EXPECT_EQ(*verdict.session_key, out.session_key);
    EXPECT_EQ(p.dev.ct, p.record.ct);
  }
}

TEST(Auth, FrozenEndToEndTranscript) {
  Game g({.seed = 7, .pin = "4821", .transaction = "amount=120;payee=alice"});
  auto c = g.new_client();
  auto s = g.new_server();
  const auto t = g.execute(c, s);
  ASSERT_EQ(t.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(to_hex(codec::encode(t.entries()[i].message)), to_hex(vec("e2e.seed7.msg" + std::to_string(i))))
        << "message " << i;
  }
  EXPECT_EQ(to_hex(g.reveal(c).expose()), to_hex(vec("e2e.seed7.sk")));
  EXPECT_EQ(to_hex(g.record().verifier->expose()), to_hex(vec("e2e.seed7.v")));
}

TEST(Envelope, WrongAddresseeRejected) {
  SeededRng rng(17);
  auto a = provision(rng);
  auto b = provision(rng);
  auto ch = server::on_hello_enrolment(a.record, codec::build_hello(a.dev.client_id, Phase::enrolment), rng, true);
  EXPECT_EQ(code_of([&] { device::respond_enrol(b.dev, ch, [] { return kPin; }); }),
            Errc::unexpected_message);
}

TEST(StateFile, RoundTripAndValidation) {
  SeededRng rng(18);
  auto p = provision(rng, 12);
  enrol(p, rng, kPin);
  const auto bytes = device::serialize(p.dev);
  EXPECT_EQ(bytes.size(), device::kStateFileBytes);
  EXPECT_EQ(bytes[0], device::kStateFileVersion);
  EXPECT_EQ(device::deserialize(bytes), p.dev);

  auto bad = bytes;
  bad[0] = 9;
  EXPECT_EQ(code_of([&] { device::deserialize(bad); }), Errc::storage_error);
  EXPECT_EQ(code_of([&] { device::deserialize(ByteView(bytes).first(bytes.size() - 1)); }),
            Errc::storage_error);
  bad = bytes;
  bad[1 + 16 + 32 + 32 + 8 + 7] ^= 1;  // ct no longer equals epoch
  EXPECT_EQ(code_of([&] { device::deserialize(bad); }), Errc::storage_error);
}

}  // namespace
}  // namespace fs2fa
