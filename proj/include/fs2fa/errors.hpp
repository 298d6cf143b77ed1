#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fs2fa {

enum class Errc {
  tampered_message,
  stale_challenge,
  pin_entry_mismatch,
  desync_too_large,
  policy_rejected,
  no_pending_exchange,
  nonce_mismatch,
  response_rejected,
  not_enrolled,
  locked_out,
  channel_not_authenticated,
  unexpected_message,
  parse_error,
  invalid_argument,
  storage_error,
  oracle_misuse,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::tampered_message: return "TamperedMessage";
    case Errc::stale_challenge: return "StaleChallenge";
    case Errc::pin_entry_mismatch: return "PinEntryMismatch";
    case Errc::desync_too_large: return "DesyncTooLarge";
    case Errc::policy_rejected: return "PolicyRejected";
    case Errc::no_pending_exchange: return "NoPendingExchange";
    case Errc::nonce_mismatch: return "NonceMismatch";
    case Errc::response_rejected: return "ResponseRejected";
    case Errc::not_enrolled: return "NotEnrolled";
    case Errc::locked_out: return "LockedOut";
    case Errc::channel_not_authenticated: return "ChannelNotAuthenticated";
    case Errc::unexpected_message: return "UnexpectedMessage";
    case Errc::parse_error: return "ParseError";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::storage_error: return "StorageError";
    case Errc::oracle_misuse: return "OracleMisuse";
  }
  return "Unknown";
}

/// Raised for every protocol abort. The code is the stable, testable part;
/// the message is for humans.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw ProtocolError(code, what);
}

}  // namespace fs2fa
