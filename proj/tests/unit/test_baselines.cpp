#include "fs2fa/attacks.hpp"
#include "fs2fa/baselines.hpp"
#include "fs2fa/policy.hpp"

#include <gtest/gtest.h>

namespace fs2fa {
namespace {

using namespace baselines;

TEST(Strawman1, RoundTripReplayAndForge) {
  SeededRng rng(1);
  const Strawman1State shared{crypto::prf_keygen(rng)};
  auto n = s1_challenge(rng);
  const auto r = s1_respond(shared.k, n);
  EXPECT_TRUE(s1_verify(shared.k, n, r));
  EXPECT_EQ(r, crypto::prf(shared.k, n.expose()));

  auto fresh = s1_challenge(rng);
  EXPECT_FALSE(s1_verify(shared.k, fresh, r));

  // Whoever reads k out of the token answers any later challenge.
  const PrfKey stolen = shared.k;
  EXPECT_TRUE(s1_verify(shared.k, fresh, s1_respond(stolen, fresh)));
  EXPECT_TRUE(attacks::strawman1_preplay(1).adversary_succeeded);
}

TEST(Strawman2, RoundTripAndWrongPin) {
  SeededRng rng(2);
  const Strawman2Client client{crypto::prf_keygen(rng), crypto::prf_keygen(rng)};
  const auto pin = Pin::parse("5150");
  const Strawman2Server srv{client.k, s2_enrol(client.sa, pin)};
  auto n = fresh_nonce(rng);
  const auto t = make_transaction(10, "alice");
  EXPECT_TRUE(s2_verify(srv.k, n, t, srv.v, s2_respond(client.k, n, t, s2_enrol(client.sa, pin))));
  const auto wrong = s2_respond(client.k, n, t, s2_enrol(client.sa, Pin::parse("5151")));
  EXPECT_FALSE(s2_verify(srv.k, n, t, srv.v, wrong));
}

TEST(Strawman2, ResponseLayout) {
  SeededRng rng(3);
  const auto k = crypto::prf_keygen(rng);
  const auto n = fresh_nonce(rng);
  const TransactionDesc t{"xyz"};
  const Bytes vb(32, 0x44);
  const Verifier v{vb};
  Bytes in;
  append(in, n.expose());
  in.push_back(0x00);
  in.push_back(0x03);
  append(in, as_bytes("xyz"));
  append(in, vb);
  EXPECT_EQ(s2_respond(k, n, t, v), crypto::prf(k, in));
}

TEST(Strawman2, OfflineSearchFindsTheUniquePin) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    attacks::BruteForceResult r;
    EXPECT_TRUE(attacks::strawman2_offline(seed, &r).adversary_succeeded) << seed;
    EXPECT_EQ(r.universe, 10'000u);
    EXPECT_EQ(r.candidates.size(), 1u);
  }
}

}  // namespace
}  // namespace fs2fa
