#pragma once

#include "fs2fa/bytes.hpp"

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace fs2fa {

/// Test hook filled in by device and server steps when a pointer is passed.
/// Holds copies of derived one-time keys, so it must never leave a test.
struct StepTrace {
  std::vector<std::string> discarded;
  std::map<std::string, Block32> derived_keys;
  int pin_prompts = 0;
};

namespace detail {

/// Runs the registered wipes on scope exit, success or abort, and records the
/// names in the trace. Declare it after the values it wipes.
class Discarder {
 public:
  explicit Discarder(StepTrace* trace) : trace_(trace) {}
  Discarder(const Discarder&) = delete;
  Discarder& operator=(const Discarder&) = delete;

  ~Discarder() {
    for (auto& [name, wipe] : items_) {
      wipe();
      if (trace_ != nullptr) trace_->discarded.push_back(name);
    }
  }

  void track(std::string name, std::function<void()> wipe) {
    items_.emplace_back(std::move(name), std::move(wipe));
  }

 private:
  StepTrace* trace_;
  std::vector<std::pair<std::string, std::function<void()>>> items_;
};

inline void record_key(StepTrace* trace, const std::string& name, ByteView key) {
  if (trace == nullptr) return;
  Block32 copy{};
  std::copy(key.begin(), key.end(), copy.begin());
  trace->derived_keys[name] = copy;
}

}  // namespace detail
}  // namespace fs2fa
