#pragma once

// Single-file server record store keyed by client id.
//
// File: magic "FS2S" | version(1)=0x01 | count(4) | { len(4) | record(len) }*
//
// Every update runs on a copy of the record and is made durable before the
// in-memory copy is replaced: the whole file is rewritten to a sibling temp
// file, fsynced, then renamed over the old one. A crash at any point leaves
// either the old or the new file, never a mix.

#include "fs2fa/errors.hpp"
#include "fs2fa/server.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

namespace fs2fa {

/// Replaces `path` with `bytes`: write a sibling temp file, fsync it, rename it
/// over the target, fsync the directory. `before_rename` is a test fault point.
inline void write_file_atomic(const std::filesystem::path& path, ByteView bytes,
                              const std::function<void()>& before_rename = {}) {
  auto tmp = path;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
  if (fd < 0) fail(Errc::storage_error, "cannot open " + tmp.string() + ": " + std::strerror(errno));
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + off, bytes.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      fail(Errc::storage_error, "write failed on " + tmp.string());
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    fail(Errc::storage_error, "fsync failed on " + tmp.string());
  }
  ::close(fd);
  if (before_rename) before_rename();
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    fail(Errc::storage_error, "cannot replace " + path.string());
  }
  auto dir = path.parent_path();
  if (dir.empty()) dir = ".";
  const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

/// Whole-file read. Missing or unreadable files are a storage error.
inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::storage_error, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class RecordStore {
 public:
  static constexpr std::uint8_t kVersion = 0x01;
  static constexpr char kMagic[4] = {'F', 'S', '2', 'S'};

  /// In-memory store. Nothing is written anywhere.
  RecordStore() = default;

  /// Opens (or creates on first write) the store at `path`.
  explicit RecordStore(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(*path_)) load();
  }

  RecordStore(const RecordStore&) = delete;
  RecordStore& operator=(const RecordStore&) = delete;

  /// Test-only fault point after the temp file is written and before it replaces the store.
  std::function<void()> fault_before_rename;

  void insert(ServerRecord record) {
    std::lock_guard lk(index_mu_);
    const auto id = record.client_id;
    if (entries_.contains(id)) fail(Errc::invalid_argument, "client already provisioned");
    auto e = std::make_unique<Entry>();
    e->record = std::move(record);
    entries_.emplace(id, std::move(e));
    persist_locked();
  }

  [[nodiscard]] bool contains(const ClientId& id) const {
    std::lock_guard lk(index_mu_);
    return entries_.contains(id);
  }

  [[nodiscard]] std::vector<ClientId> ids() const {
    std::lock_guard lk(index_mu_);
    std::vector<ClientId> out;
    for (const auto& [id, _] : entries_) out.push_back(id);
    return out;
  }

  /// A copy of the current record.
  [[nodiscard]] ServerRecord get(const ClientId& id) const {
    auto& e = entry(id);
    std::lock_guard lk(e.mu);
    return e.record;
  }

  /// Runs `fn` on a copy of the record under the record's lock and commits the
  /// copy. A ProtocolError from `fn` is a protocol-level abort: the copy is
  /// still committed (pending exchanges are discarded, failures counted) and the
  /// error is rethrown. Any other exception leaves the record untouched.
  template <class F>
  auto update(const ClientId& id, F&& fn) -> std::invoke_result_t<F, ServerRecord&> {
    auto& e = entry(id);
    std::lock_guard lk(e.mu);
    ServerRecord copy = e.record;
    using R = std::invoke_result_t<F, ServerRecord&>;
    try {
      if constexpr (std::is_void_v<R>) {
        fn(copy);
        commit(e, std::move(copy));
      } else {
        R result = fn(copy);
        commit(e, std::move(copy));
        return result;
      }
    } catch (const ProtocolError&) {
      commit(e, std::move(copy));
      throw;
    }
  }

  [[nodiscard]] const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

  /// Encodes the given records in the store file format.
  static Bytes encode_file(const std::vector<const ServerRecord*>& records) {
    Bytes out(std::begin(kMagic), std::end(kMagic));
    out.push_back(kVersion);
    append_be32(out, static_cast<std::uint32_t>(records.size()));
    for (const auto* r : records) {
      Bytes one = server::serialize(*r);
      append_be32(out, static_cast<std::uint32_t>(one.size()));
      append(out, one);
      zeroize(one);
    }
    return out;
  }

  static std::vector<ServerRecord> decode_file(ByteView in) {
    if (in.size() < 9 || !std::equal(std::begin(kMagic), std::end(kMagic), in.begin())) {
      fail(Errc::storage_error, "not a server store file");
    }
    if (in[4] != kVersion) fail(Errc::storage_error, "unsupported server store version");
    const std::uint32_t count = read_be32(in.subspan(5));
    std::size_t off = 9;
    std::vector<ServerRecord> out;
    for (std::uint32_t i = 0; i < count; ++i) {
      if (in.size() - off < 4) fail(Errc::storage_error, "truncated server store");
      const std::uint32_t len = read_be32(in.subspan(off));
      off += 4;
      if (in.size() - off < len) fail(Errc::storage_error, "truncated server store");
      out.push_back(server::deserialize(in.subspan(off, len)));
      off += len;
    }
    if (off != in.size()) fail(Errc::storage_error, "trailing bytes in server store");
    return out;
  }

 private:
  struct Entry {
    std::mutex mu;
    ServerRecord record;
  };

  static void append_be32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
  }

  static std::uint32_t read_be32(ByteView in) {
    return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
           (std::uint32_t{in[2]} << 8) | in[3];
  }

  Entry& entry(const ClientId& id) const {
    std::lock_guard lk(index_mu_);
    auto it = entries_.find(id);
    if (it == entries_.end()) fail(Errc::not_enrolled, "unknown client " + id.hex());
    return *it->second;
  }

  void commit(Entry& e, ServerRecord next) {
    std::lock_guard lk(index_mu_);
    if (path_) {
      // Write the file as it will look after the commit, then swap in memory.
      std::vector<const ServerRecord*> records;
      for (const auto& [id, other] : entries_) {
        records.push_back(other.get() == &e ? &next : &other->record);
      }
      write_file(records);
    }
    e.record = std::move(next);
  }

  void persist_locked() {
    if (!path_) return;
    std::vector<const ServerRecord*> records;
    for (const auto& [id, e] : entries_) records.push_back(&e->record);
    write_file(records);
  }

  void write_file(const std::vector<const ServerRecord*>& records) {
    Bytes bytes = encode_file(records);
    try {
      write_file_atomic(*path_, bytes, fault_before_rename);
    } catch (...) {
      zeroize(bytes);
      throw;
    }
    zeroize(bytes);
  }

  void load() {
    Bytes bytes = read_file(*path_);
    auto records = decode_file(bytes);
    zeroize(bytes);
    for (auto& r : records) {
      auto e = std::make_unique<Entry>();
      const auto id = r.client_id;
      e->record = std::move(r);
      if (!entries_.emplace(id, std::move(e)).second) {
        fail(Errc::storage_error, "duplicate client in server store");
      }
    }
  }

  std::optional<std::filesystem::path> path_;
  mutable std::mutex index_mu_;
  std::map<ClientId, std::unique_ptr<Entry>> entries_;
};

}  // namespace fs2fa
