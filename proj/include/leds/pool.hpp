// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "leds/object_id.hpp"
#include "leds/write_stats.hpp"

namespace leds {

class Transaction;

namespace detail {
class PoolState;
}

/// Fixed byte offsets of the pool header. The header occupies the first 4 KiB
/// of the file; all integers are little-endian.
namespace header {
inline constexpr std::uint64_t kMagic = 0;                // 8 bytes, "LEDSPOOL"
inline constexpr std::uint64_t kFormatVersion = 8;        // u32
inline constexpr std::uint64_t kLayoutName = 16;          // 64 bytes, zero padded
inline constexpr std::uint64_t kLayoutVersion = 80;       // u32
inline constexpr std::uint64_t kPoolUuid = 88;            // u64
inline constexpr std::uint64_t kRootId = 96;              // ObjectId
inline constexpr std::uint64_t kRootSize = 112;           // u64
inline constexpr std::uint64_t kHeapOffset = 120;         // u64
inline constexpr std::uint64_t kCapacity = 128;           // u64, heap bytes
inline constexpr std::uint64_t kAllocatorStateOffset = 136;
inline constexpr std::uint64_t kLogOffset = 144;          // u64
inline constexpr std::uint64_t kLogCapacity = 152;        // u64
inline constexpr std::uint64_t kSchemaFingerprint = 160;  // u64, 0 = none recorded
inline constexpr std::uint64_t kAllocatorState = 512;     // u64 bump frontier (relative to heap)
inline constexpr std::uint64_t kLogControl = 1024;        // u64 state, u64 used bytes
inline constexpr std::uint64_t kSize = 4096;

inline constexpr char kMagicText[8] = {'L', 'E', 'D', 'S', 'P', 'O', 'O', 'L'};
inline constexpr std::uint32_t kFormat = 1;
inline constexpr std::size_t kMaxLayoutName = 63;
}  // namespace header

inline constexpr std::uint64_t kMinCapacity = 1ull << 20;
inline constexpr std::uint64_t kAlignment = 16;
inline constexpr std::uint64_t kBlockHeaderSize = 16;

/// Fires a SimulatedCrash on the `trigger`-th persistent write after arming.
struct CrashPlan {
  std::uint64_t trigger = 1;
  bool armed = true;
};

/// An open, memory-mapped pool file. At most one handle per file may be open
/// in a process; a sidecar `<path>.lock` enforces it.
///
/// The handle is confined to one thread at a time and must not be moved while
/// a transaction is open on it.
class Pool {
 public:
  static Pool create(const std::filesystem::path& path, std::string_view layout_name,
                     std::uint64_t capacity);
  /// Opens an existing pool, rolling back or completing any interrupted
  /// transaction. Throws LayoutMismatch when the stored name differs.
  static Pool open(const std::filesystem::path& path, std::string_view layout_name);
  /// Opens with whatever layout name the file carries, after log recovery.
  static Pool recover(const std::filesystem::path& path);
  /// Removes the pool file (and any stale lock file).
  static void remove(const std::filesystem::path& path);

  Pool(Pool&&) noexcept;
  Pool& operator=(Pool&&) noexcept;
  ~Pool();

  void close();
  bool is_open() const noexcept;
  const std::filesystem::path& path() const noexcept;

  std::uint64_t uuid() const;
  std::string layout_name() const;
  std::uint32_t layout_version() const;
  /// Transactional when a transaction is active on the pool.
  void set_layout_version(std::uint32_t version);
  std::uint64_t schema_fingerprint() const;
  void set_schema_fingerprint(std::uint64_t fingerprint);
  std::uint64_t capacity() const;
  std::uint64_t heap_offset() const;
  std::uint64_t log_capacity() const;

  /// Returns the root object, allocating or growing it as needed. Growing
  /// copies the old contents into the new root's prefix and frees the old one.
  ObjectId get_root(std::uint64_t requested_size);
  ObjectId root() const;
  std::uint64_t root_size() const;
  /// Frees the root object and clears the header slot, so the next get_root
  /// allocates a fresh one.
  void drop_root(Transaction& tx);

  /// Session address of `oid`. Validates pool identity and bounds.
  std::byte* translate(ObjectId oid);
  /// Translation without validation or counting.
  std::byte* translate_unchecked(ObjectId oid) noexcept;

  void read(ObjectId oid, std::uint64_t offset, std::span<std::byte> out);
  template <typename T>
  T load(ObjectId oid, std::uint64_t offset = 0) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    std::memcpy(&value, translate(oid) + offset, sizeof(T));
    return value;
  }

  /// Non-transactional store of user bytes.
  void store(ObjectId oid, std::uint64_t offset, std::span<const std::byte> bytes);
  template <typename T>
  void store_value(ObjectId oid, std::uint64_t offset, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    store(oid, offset, std::as_bytes(std::span{&value, 1}));
  }

  ObjectId alloc(std::uint64_t size, bool zeroed);
  void free(ObjectId oid);
  bool is_allocated(ObjectId oid) const;
  /// Payload bytes the allocator reserves for a request of `size`.
  static std::uint64_t usable_size(std::uint64_t size) noexcept;
  std::uint64_t live_bytes() const;
  std::uint64_t live_objects() const;

  const WriteStats& stats() const;
  /// Mutable counters; the extension runtime records its cost categories here.
  WriteStats& counters();

  void arm_crash(CrashPlan plan);
  void disarm_crash();
  /// Persistent writes issued by this handle so far.
  std::uint64_t persistent_writes() const;

  Transaction* active_transaction() const noexcept;
  /// Changes whenever a transaction begins or ends.
  std::uint64_t transaction_epoch() const noexcept;

 private:
  friend class Transaction;
  explicit Pool(std::unique_ptr<detail::PoolState> state);
  detail::PoolState& state() const;

  std::unique_ptr<detail::PoolState> s_;
};

}  // namespace leds
