#pragma once

// Two straw-man protocols kept around as attack targets.
//
// Strawman I: one shared MAC key, response = MAC_k(N). No PIN at all, so a
// stolen token answers every challenge.
//
// Strawman II: adds a PIN verifier v = PRF_sa(PIN) to the MAC input. The
// token still holds k and sa together, so one captured transcript plus a
// token dump lets an offline search pin down the PIN.
//
// The MAC is the module PRF.

#include "fs2fa/codec.hpp"
#include "fs2fa/crypto_core.hpp"
#include "fs2fa/device.hpp"
#include "fs2fa/types.hpp"

namespace fs2fa::baselines {

struct Strawman1State {
  PrfKey k;
};

struct Strawman2Client {
  PrfKey k;
  PrfKey sa;
};

struct Strawman2Server {
  PrfKey k;
  Verifier v;
};

inline Nonce s1_challenge(Rng& rng) { return fresh_nonce(rng); }

inline Block32 s1_respond(const PrfKey& k, const Nonce& n) { return crypto::prf(k, n.expose()); }

inline bool s1_verify(const PrfKey& k, const Nonce& n, const Block32& r) {
  return equal_ct(s1_respond(k, n), r);
}

inline Verifier s2_enrol(const PrfKey& sa, const Pin& pin) {
  return device::compute_verifier(sa, pin);
}

/// prf(k, N || len(t) || t || v)
inline Block32 s2_respond(const PrfKey& k, const Nonce& n, const TransactionDesc& t,
                          const Verifier& v) {
  Bytes in;
  append(in, n.expose());
  codec::append_transaction(in, t);
  append(in, v.expose());
  auto r = crypto::prf(k, in);
  zeroize(in);
  return r;
}

inline bool s2_verify(const PrfKey& k, const Nonce& n, const TransactionDesc& t,
                      const Verifier& v, const Block32& r) {
  return equal_ct(s2_respond(k, n, t, v), r);
}

}  // namespace fs2fa::baselines
