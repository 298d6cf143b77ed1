#include "fs2fa/codec.hpp"
#include "fs2fa/rng.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <string>

namespace fs2fa {
namespace {

using testing::vec;

AeCiphertext random_ct(Rng& rng, std::size_t body) {
  AeCiphertext ct;
  ct.body.resize(body);
  rng.fill(ct.body);
  rng.fill(ct.tag);
  return ct;
}

WireMessage random_message(Rng& rng) {
  const auto id = ClientId::generate(rng);
  switch (rng.uniform(6)) {
    case 0: return codec::build_hello(id, Phase::enrolment);
    case 1: return codec::build_hello(id, Phase::authentication);
    case 2: return codec::make_enrol_challenge(id, random_ct(rng, 24));
    case 3: return codec::make_enrol_response(id, random_ct(rng, 16 + 4 + rng.uniform(29)));
    case 4: {
      const auto tlen = 1 + rng.uniform(kMaxTransactionBytes);
      return codec::make_auth_challenge(id, random_ct(rng, 16 + 2 + tlen), random_ct(rng, 8));
    }
    default: {
      Block32 r{};
      rng.fill(r);
      return codec::make_auth_response(id, r);
    }
  }
}

TEST(Codec, RandomEnvelopesRoundTrip) {
  SeededRng rng(100);
  for (int i = 0; i < 10'000; ++i) {
    const auto m = random_message(rng);
    const auto bytes = codec::encode(m);
    EXPECT_EQ(codec::parse(bytes), m);
    EXPECT_EQ(codec::qr_decode(codec::qr_encode(m)), m);
  }
}

TEST(Codec, FixedSizes) {
  SeededRng rng(101);
  const auto id = ClientId::generate(rng);
  EXPECT_EQ(codec::encode(codec::build_hello(id, Phase::enrolment)).size(), 18u);
  const auto n = fresh_nonce(rng);
  EXPECT_EQ(codec::encode_enrol_challenge_plain(n, 5).size(), 24u);
  EXPECT_EQ(codec::make_enrol_challenge(id, random_ct(rng, 24)).payload.size(), 56u);
  EXPECT_EQ(codec::make_auth_response(id, Block32{}).payload.size(), 32u);
  EXPECT_EQ(codec::encode_auth_counter_plain(9).size(), 8u);
  const auto t = TransactionDesc{"x"};
  EXPECT_EQ(codec::encode_auth_challenge_inner_plain(n, t).size(), 19u);
}

TEST(Codec, HeaderLayout) {
  SeededRng rng(102);
  const auto id = ClientId::generate(rng);
  const auto b = codec::encode(codec::build_hello(id, Phase::authentication));
  EXPECT_EQ(b[0], 0x01);
  EXPECT_EQ(b[1], 0x02);
  EXPECT_TRUE(std::equal(id.bytes.begin(), id.bytes.end(), b.begin() + 2));
}

TEST(Codec, PlaintextRoundTrips) {
  SeededRng rng(103);
  const auto n = fresh_nonce(rng);
  auto [n1, ct] = codec::parse_enrol_challenge_plain(codec::encode_enrol_challenge_plain(n, 0x0102030405060708ULL));
  EXPECT_EQ(n1, n);
  EXPECT_EQ(ct, 0x0102030405060708ULL);

  Bytes vb(20, 0x5a);
  const Verifier v{vb};
  auto [n2, v2] = codec::parse_enrol_response_plain(codec::encode_enrol_response_plain(n, v));
  EXPECT_EQ(n2, n);
  EXPECT_EQ(v2, v);

  const TransactionDesc t{std::string(kMaxTransactionBytes, 'q')};
  auto [n3, t3] = codec::parse_auth_challenge_inner_plain(codec::encode_auth_challenge_inner_plain(n, t));
  EXPECT_EQ(n3, n);
  EXPECT_EQ(t3, t);

  EXPECT_EQ(codec::parse_auth_counter_plain(codec::encode_auth_counter_plain(77)), 77u);
}

TEST(Codec, BigEndianCounter) {
  const auto b = codec::encode_auth_counter_plain(0x0102030405060708ULL);
  EXPECT_EQ(to_hex(b), "0102030405060708");
}

TEST(Codec, SessionInputLayout) {
  SeededRng rng(104);
  const auto n = fresh_nonce(rng);
  const TransactionDesc t{"ab"};
  Bytes vb(32, 0x11);
  const auto in = codec::session_input(n, t, Verifier{vb}, codec::kResponseDomain);
  ASSERT_EQ(in.size(), 16u + 2 + 2 + 32 + 1);
  EXPECT_EQ(in[16], 0x00);
  EXPECT_EQ(in[17], 0x02);
  EXPECT_EQ(in[18], 'a');
  EXPECT_EQ(in.back(), 0x01);
}

TEST(Codec, RejectsBadEnvelopes) {
  SeededRng rng(105);
  const auto id = ClientId::generate(rng);
  auto good = codec::encode(codec::make_auth_response(id, Block32{}));

  auto expect_parse_error = [](const Bytes& b) {
    try {
      (void)codec::parse(b);
      FAIL() << "accepted " << to_hex(b);
    } catch (const ProtocolError& e) {
      EXPECT_EQ(e.code(), Errc::parse_error);
    }
  };

  expect_parse_error(Bytes(good.begin(), good.begin() + 17));
  auto bad_version = good;
  bad_version[0] = 0x02;
  expect_parse_error(bad_version);
  auto bad_type = good;
  bad_type[1] = 0x07;
  expect_parse_error(bad_type);
  bad_type[1] = 0x00;
  expect_parse_error(bad_type);
  auto short_payload = good;
  short_payload.pop_back();
  expect_parse_error(short_payload);
  auto hello_with_payload = codec::encode(codec::build_hello(id, Phase::enrolment));
  hello_with_payload.push_back(0);
  expect_parse_error(hello_with_payload);
  expect_parse_error(Bytes{});
}

TEST(Codec, VersionCheckedBeforeType) {
  Bytes b(18 + 32, 0);
  b[0] = 0x09;
  b[1] = 0x42;
  try {
    (void)codec::parse(b);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Codec, RejectsBadPlaintexts) {
  EXPECT_THROW(codec::parse_enrol_challenge_plain(Bytes(23)), ProtocolError);
  EXPECT_THROW(codec::parse_enrol_challenge_plain(Bytes(25)), ProtocolError);
  EXPECT_THROW(codec::parse_enrol_response_plain(Bytes(19)), ProtocolError);
  EXPECT_THROW(codec::parse_enrol_response_plain(Bytes(49)), ProtocolError);
  EXPECT_THROW(codec::parse_auth_counter_plain(Bytes(7)), ProtocolError);

  Bytes inner(16 + 2 + 3, 0);
  inner[17] = 4;  // claims 4 bytes, carries 3
  EXPECT_THROW(codec::parse_auth_challenge_inner_plain(inner), ProtocolError);
  inner[17] = 0;
  EXPECT_THROW(codec::parse_auth_challenge_inner_plain(Bytes(16 + 2, 0)), ProtocolError);
}

TEST(Codec, AuthChallengeLengthPrefixChecked) {
  SeededRng rng(106);
  const auto id = ClientId::generate(rng);
  auto m = codec::make_auth_challenge(id, random_ct(rng, 30), random_ct(rng, 8));
  EXPECT_NO_THROW(codec::auth_challenge_ciphertexts(m));
  m.payload[1] ^= 0x01;
  EXPECT_THROW(codec::auth_challenge_ciphertexts(m), ProtocolError);
}

TEST(Codec, ExpectTypeReportsMismatch) {
  SeededRng rng(107);
  const auto m = codec::build_hello(ClientId::generate(rng), Phase::enrolment);
  try {
    codec::expect_type(m, MsgType::auth_response);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.code(), Errc::unexpected_message);
  }
}

TEST(Codec, QrRejectsGarbage) {
  SeededRng rng(108);
  const auto text = codec::qr_encode(codec::build_hello(ClientId::generate(rng), Phase::enrolment));
  EXPECT_THROW(codec::qr_decode(text + "!"), ProtocolError);
  EXPECT_THROW(codec::qr_decode("@@@@"), ProtocolError);
  EXPECT_THROW(codec::qr_decode(""), ProtocolError);
}

TEST(Codec, FrozenTranscriptParses) {
  const MsgType expected[] = {MsgType::hello_enrol,  MsgType::enrol_challenge,
                              MsgType::enrol_response, MsgType::hello_auth,
                              MsgType::auth_challenge, MsgType::auth_response};
  for (int i = 0; i < 6; ++i) {
    const auto& raw = vec("e2e.seed7.msg" + std::to_string(i));
    const auto m = codec::parse(raw);
    EXPECT_EQ(m.type, expected[i]);
    EXPECT_EQ(codec::encode(m), raw);
  }
}

}  // namespace
}  // namespace fs2fa
