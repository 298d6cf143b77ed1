// Provision a token, enrol a PIN and authorise one transaction, all in memory.

#include "fs2fa/fs2fa.hpp"

#include <iostream>

int main() {
  using namespace fs2fa;

  SystemRng rng;
  auto setup = server::server_setup(rng);
  ServerRecord record = std::move(setup.record);
  DeviceState dev = device::device_setup(std::move(setup.bundle.k), std::move(setup.bundle.st0),
                                         setup.bundle.client_id, rng);
  const auto id = dev.client_id;

  // Enrolment. The hello must arrive over an authenticated channel.
  auto challenge = server::on_hello_enrolment(record, codec::build_hello(id, Phase::enrolment), rng, true);
  auto reply = device::respond_enrol(dev, challenge, [] { return Pin::parse("2468"); });
  server::on_enrol_response(record, reply);
  std::cout << "enrolled, counter " << record.ct << '\n';

  // Authentication of one transaction.
  const auto t = make_transaction(250, "alice");
  challenge = server::on_hello_auth(record, codec::build_hello(id, Phase::authentication), t, rng);
  auto answer = device::respond_auth(
      dev, challenge, [] { return Pin::parse("2468"); },
      [](const TransactionDesc& shown) {
        std::cout << "approve " << shown.text() << "? yes\n";
        return true;
      });
  const auto verdict = server::on_auth_response(record, answer.message, Clock::now(), LockoutPolicy{});
  const bool same_key = verdict.accepted && *verdict.session_key == answer.outcome.session_key;
  std::cout << (verdict.accepted ? "accepted" : "rejected") << ", session keys "
            << (same_key ? "match" : "differ") << '\n';
  return verdict.accepted && same_key ? 0 : 1;
}
