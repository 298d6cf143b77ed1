#include "fs2fa/harness.hpp"
#include "fs2fa/scenarios.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace fs2fa {
namespace {

using testing::vec;

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ProtocolError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no ProtocolError";
  return Errc::oracle_misuse;
}

bool contains(ByteView hay, ByteView needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

TEST(Execute, PartnersAgreeOnKeyAndSid) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Game g({.seed = seed});
    auto c = g.new_client();
    auto s = g.new_server();
    const auto t = g.execute(c, s);
    const auto& ci = g.instance(c);
    const auto& sj = g.instance(s);
    ASSERT_EQ(ci.status, Status::accepted);
    ASSERT_EQ(sj.status, Status::accepted);
    EXPECT_EQ(ci.accepted->sk, sj.accepted->sk);
    EXPECT_EQ(ci.accepted->sid, sj.accepted->sid);
    EXPECT_EQ(ci.accepted->sid, session_id(t));
    EXPECT_EQ(ci.accepted->pid, "server");
    EXPECT_EQ(sj.accepted->pid, g.client_id().hex());
  }
}

TEST(Execute, SevenItemsInSixEnvelopes) {
  Game g({.seed = 3});
  auto c = g.new_client();
  auto s = g.new_server();
  const auto t = g.execute(c, s);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.items().size(), 7u);
  const MsgType types[] = {MsgType::hello_enrol, MsgType::enrol_challenge, MsgType::enrol_response,
                           MsgType::hello_auth,  MsgType::auth_challenge,  MsgType::auth_response};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(t.entries()[i].message.type, types[i]);
}

TEST(Execute, DeterministicPerSeed) {
  auto run = [](std::uint64_t seed) {
    Game g({.seed = seed});
    auto c = g.new_client();
    auto s = g.new_server();
    return g.execute(c, s);
  };
  EXPECT_EQ(run(9), run(9));
  EXPECT_NE(run(9).bytes(), run(10).bytes());
}

TEST(Execute, MatchesFrozenVectors) {
  Game g({.seed = 7, .pin = "4821"});
  auto c = g.new_client();
  auto s = g.new_server();
  const auto t = g.execute(c, s);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(codec::encode(t.entries()[i].message), vec("e2e.seed7.msg" + std::to_string(i)));
  }
  EXPECT_EQ(to_hex(g.reveal(s).expose()), to_hex(vec("e2e.seed7.sk")));
}

TEST(Execute, RequiresFreshInstances) {
  Game g({.seed = 4});
  auto c = g.new_client();
  auto s = g.new_server();
  (void)g.execute(c, s);
  EXPECT_EQ(code_of([&] { g.execute(c, g.new_server()); }), Errc::oracle_misuse);
  EXPECT_EQ(code_of([&] { g.execute(g.new_client(), s); }), Errc::oracle_misuse);
  EXPECT_EQ(code_of([&] { g.execute(s, c); }), Errc::oracle_misuse);
}

TEST(Send, StartProducesHello) {
  Game g({.seed = 5});
  auto c = g.new_client();
  auto r = g.send(c, Start{Phase::enrolment});
  ASSERT_TRUE(r.reply);
  EXPECT_EQ(r.reply->type, MsgType::hello_enrol);
  EXPECT_EQ(r.reply->client_id, g.client_id());
  auto c2 = g.new_client();
  EXPECT_EQ(g.send(c2, Start{Phase::authentication}).reply->type, MsgType::hello_auth);
}

TEST(Send, MalformedInputTerminatesInstance) {
  Game g({.seed = 6});
  auto c = g.new_client();
  (void)g.send(c, Start{Phase::enrolment});
  auto r = g.send(c, codec::build_hello(g.client_id(), Phase::enrolment));
  EXPECT_EQ(r.abort, Errc::unexpected_message);
  EXPECT_EQ(g.instance(c).status, Status::terminated);
  EXPECT_EQ(code_of([&] { g.send(c, Start{Phase::enrolment}); }), Errc::oracle_misuse);
}

TEST(Send, ReplayedResponseRejected) {
  EXPECT_FALSE(attacks::main_replay(11).adversary_succeeded);
  Game g({.seed = 12});
  auto c = g.new_client();
  auto s = g.new_server();
  const auto t = g.execute(c, s);
  auto s2 = g.new_server();
  (void)g.send(s2, codec::build_hello(g.client_id(), Phase::authentication));
  auto r = g.send(s2, t.entries().back().message);
  EXPECT_EQ(r.abort, Errc::response_rejected);
  EXPECT_EQ(g.instance(s2).status, Status::terminated);
}

TEST(Send, AcceptsAtMostOnce) {
  Game g({.seed = 13});
  auto c = g.new_client();
  auto s = g.new_server();
  const auto t = g.execute(c, s);
  // Accepted instances take no further input.
  EXPECT_EQ(code_of([&] { g.send(c, Start{Phase::authentication}); }), Errc::oracle_misuse);
  EXPECT_EQ(code_of([&] { g.send(s, t.entries()[3].message); }), Errc::oracle_misuse);
}

TEST(Reveal, Semantics) {
  Game g({.seed = 14});
  auto c = g.new_client();
  auto s = g.new_server();
  EXPECT_EQ(code_of([&] { g.reveal(c); }), Errc::oracle_misuse);
  (void)g.execute(c, s);
  const auto a = g.reveal(c);
  EXPECT_EQ(a, g.reveal(c));
  EXPECT_EQ(a, g.reveal(s));
}

TEST(TestQuery, ForcedCoins) {
  Game g({.seed = 15});
  auto c = g.new_client();
  auto s = g.new_server();
  (void)g.execute(c, s);
  const auto real = g.instance(c).accepted->sk.copy();
  EXPECT_EQ(g.test(c, true), real);
  EXPECT_EQ(g.instance(c).test_coin, true);
  EXPECT_EQ(code_of([&] { g.test(c, true); }), Errc::oracle_misuse);
  const auto random = g.test(s, false);
  EXPECT_NE(random, real);
  EXPECT_EQ(g.instance(s).test_coin, false);
}

TEST(TestQuery, FreshnessRespectsPartnerReveal) {
  Game g({.seed = 16});
  auto c = g.new_client();
  auto s = g.new_server();
  (void)g.execute(c, s);
  EXPECT_TRUE(g.fresh(c));
  (void)g.reveal(s);
  EXPECT_FALSE(g.fresh(c));
  EXPECT_FALSE(g.fresh(s));
  EXPECT_EQ(code_of([&] { g.test(c); }), Errc::oracle_misuse);
}

TEST(TestQuery, NotAcceptedIsNotFresh) {
  Game g({.seed = 17});
  auto c = g.new_client();
  EXPECT_EQ(code_of([&] { g.test(c); }), Errc::oracle_misuse);
}

TEST(TestQuery, FairCoinVaries) {
  int ones = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Game g({.seed = seed});
    auto c = g.new_client();
    auto s = g.new_server();
    (void)g.execute(c, s);
    (void)g.test(c);
    ones += *g.instance(c).test_coin ? 1 : 0;
  }
  EXPECT_GT(ones, 5);
  EXPECT_LT(ones, 35);
}

TEST(Corrupt, PinIsExactlyThePin) {
  Game g({.seed = 18, .pin = "90210"});
  EXPECT_EQ(g.corrupt_client_pin(), "90210");
}

TEST(Corrupt, DeviceDumpHoldsNoVerifierOrPin) {
  Game g({.seed = 19, .pin = "7777"});
  auto c = g.new_client();
  auto s = g.new_server();
  (void)g.execute(c, s);
  const auto dump = g.corrupt_client_device();
  const auto state = device::deserialize(dump);
  EXPECT_EQ(state, g.device());
  EXPECT_TRUE(contains(dump, g.device().k.expose()));
  EXPECT_TRUE(contains(dump, g.device().sa.expose()));
  EXPECT_TRUE(contains(dump, g.device().st.expose()));
  EXPECT_FALSE(contains(dump, g.record().verifier->expose()));
  EXPECT_FALSE(contains(dump, as_bytes("7777")));
}

TEST(Corrupt, ServerDumpHoldsVerifierNotSa) {
  Game g({.seed = 20});
  auto c = g.new_client();
  auto s = g.new_server();
  (void)g.execute(c, s);
  const auto dump = g.corrupt_server();
  EXPECT_EQ(server::deserialize(dump), g.record());
  EXPECT_TRUE(contains(dump, g.record().k.expose()));
  EXPECT_TRUE(contains(dump, g.record().verifier->expose()));
  EXPECT_FALSE(contains(dump, g.device().sa.expose()));
}

TEST(Events, LineDelimitedRecords) {
  Game g({.seed = 21});
  auto c = g.new_client();
  auto s = g.new_server();
  (void)g.execute(c, s);
  const auto& lines = g.events().lines();
  ASSERT_FALSE(lines.empty());
  for (const auto& l : lines) {
    EXPECT_EQ(l.rfind("event=", 0), 0u) << l;
    EXPECT_EQ(l.find('\n'), std::string::npos);
  }
  EXPECT_EQ(std::count_if(lines.begin(), lines.end(),
                          [](const std::string& l) { return l.rfind("event=accept", 0) == 0; }),
            2);
}

TEST(Scenarios, AdversaryFailsInEveryScenario) {
  for (int id = 1; id <= scenarios::kCount; ++id) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto r = scenarios::run_scenario(id, seed);
      EXPECT_FALSE(r.adversary_succeeded) << r.name << " seed " << seed;
      EXPECT_EQ(r.events.lines().back(), "event=result adversary=failed");
    }
  }
}

TEST(Scenarios, TwoReportsFullCandidateSetAndLockout) {
  const auto r = scenarios::run_scenario(2, 5);
  const auto text = r.events.str();
  EXPECT_NE(text.find("candidates=10000"), std::string::npos) << text;
  EXPECT_NE(text.find("LockedOut"), std::string::npos) << text;
}

TEST(Scenarios, FiveDeviceAbortsOnTamper) {
  const auto r = scenarios::run_scenario(5, 1);
  EXPECT_NE(r.events.str().find("TamperedMessage"), std::string::npos) << r.events.str();
}

TEST(Scenarios, NamesAndIds) {
  EXPECT_EQ(scenarios::parse_id("3"), 3);
  EXPECT_EQ(scenarios::parse_id("transaction-vs-mitm"), 5);
  EXPECT_THROW(scenarios::parse_id("6"), ProtocolError);
  EXPECT_THROW(scenarios::run_scenario(0, 1), ProtocolError);
}

}  // namespace
}  // namespace fs2fa
