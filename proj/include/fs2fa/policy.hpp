#pragma once

// The transaction predicate phi(t, policy) -> {0, 1}.
//
// Transactions are described as `key=value` pairs separated by ';', for
// example "amount=250;payee=alice;memo=rent". Only `amount` (decimal,
// unsigned) and `payee` are interpreted; other keys are displayed but ignored.

#include "fs2fa/types.hpp"

#include <charconv>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace fs2fa {

struct TransactionFields {
  std::uint64_t amount = 0;
  std::string payee;
};

inline std::optional<TransactionFields> parse_transaction(std::string_view text) {
  std::optional<std::uint64_t> amount;
  std::optional<std::string> payee;
  while (!text.empty()) {
    const auto semi = text.find(';');
    const auto item = text.substr(0, semi);
    text = semi == std::string_view::npos ? std::string_view{} : text.substr(semi + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) return std::nullopt;
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "amount") {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (value.empty() || ec != std::errc{} || p != value.data() + value.size() || amount) {
        return std::nullopt;
      }
      amount = v;
    } else if (key == "payee") {
      if (value.empty() || payee) return std::nullopt;
      payee = std::string(value);
    }
  }
  if (!amount || !payee) return std::nullopt;
  return TransactionFields{*amount, *payee};
}

inline TransactionDesc make_transaction(std::uint64_t amount, std::string_view payee) {
  return TransactionDesc{"amount=" + std::to_string(amount) + ";payee=" + std::string(payee)};
}

/// The client's acceptance policy: a spending cap and a payee allow-list.
struct Policy {
  std::uint64_t max_amount = 0;
  std::set<std::string, std::less<>> allowed_payees;
};

/// 1 iff the transaction parses, its amount is within the cap and its payee is allowed.
inline int phi(const TransactionDesc& t, const Policy& policy) {
  auto fields = parse_transaction(t.text());
  if (!fields) return 0;
  return fields->amount <= policy.max_amount && policy.allowed_payees.contains(fields->payee) ? 1 : 0;
}

/// How the device decides whether the client accepts a displayed transaction.
using TransactionCheck = std::function<bool(const TransactionDesc&)>;

inline TransactionCheck policy_check(Policy policy) {
  return [policy = std::move(policy)](const TransactionDesc& t) { return phi(t, policy) == 1; };
}

inline TransactionCheck approve_all() {
  return [](const TransactionDesc&) { return true; };
}

}  // namespace fs2fa
