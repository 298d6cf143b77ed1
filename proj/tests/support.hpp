#pragma once

#include "fs2fa/bytes.hpp"

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

namespace fs2fa::testing {

/// Frozen vectors from fixtures/vectors.txt (`name = hex` lines).
inline const std::map<std::string, Bytes>& vectors() {
  static const auto table = [] {
    std::map<std::string, Bytes> out;
    std::ifstream in(std::string(FS2FA_FIXTURES_DIR) + "/vectors.txt");
    if (!in) throw std::runtime_error("missing fixtures/vectors.txt");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find(" = ");
      out[line.substr(0, eq)] = from_hex(line.substr(eq + 3));
    }
    return out;
  }();
  return table;
}

inline const Bytes& vec(const std::string& name) {
  auto it = vectors().find(name);
  if (it == vectors().end()) throw std::out_of_range("no vector " + name);
  return it->second;
}

}  // namespace fs2fa::testing
