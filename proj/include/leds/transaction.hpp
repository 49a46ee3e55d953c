// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <span>
#include <type_traits>
#include <unordered_set>
#include <vector>

#include "leds/object_id.hpp"

namespace leds {

class Pool;

namespace detail {
class PoolState;
}

enum class TxState { active, committed, aborted };

/// Undo-log record layout in the pool's log region.
namespace undo {
inline constexpr std::uint32_t kSnapshot = 1;
inline constexpr std::uint32_t kAlloc = 2;
inline constexpr std::uint32_t kFree = 3;
/// u32 type, u32 reserved, u64 absolute offset, u64 length, u64 reserved.
inline constexpr std::uint64_t kRecordHeaderSize = 32;

inline constexpr std::uint64_t kStateIdle = 0;
inline constexpr std::uint64_t kStateActive = 1;
inline constexpr std::uint64_t kStateCommitted = 2;
}  // namespace undo

/// Flat failure-atomic transaction over one pool (undo logging).
///
/// Writes to objects allocated inside the transaction are not snapshotted;
/// every other range is snapshotted before its first modification. Frees are
/// deferred to commit. Destroying an active transaction aborts it.
class Transaction {
 public:
  explicit Transaction(Pool& pool);
  Transaction(const Transaction&) = delete;
  Transaction& operator=(const Transaction&) = delete;
  ~Transaction();

  void commit();
  void abort();
  TxState state() const noexcept { return state_; }
  bool active() const noexcept { return state_ == TxState::active; }

  void snapshot(ObjectId oid, std::uint64_t offset, std::uint64_t length);

  void write(ObjectId oid, std::uint64_t offset, std::span<const std::byte> bytes);
  template <typename T>
  void set(ObjectId oid, std::uint64_t offset, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    write(oid, offset, std::as_bytes(std::span{&value, 1}));
  }
  void fill_zero(ObjectId oid, std::uint64_t offset, std::uint64_t length);

  ObjectId alloc_zeroed(std::uint64_t size);
  void free(ObjectId oid);
  /// memmove-like copy between (possibly the same) objects.
  void copy_bytes(ObjectId dst, ObjectId src, std::uint64_t length);
  void copy_bytes(ObjectId dst, std::uint64_t dst_offset, ObjectId src, std::uint64_t src_offset,
                  std::uint64_t length);

  /// True when `oid` was allocated by this transaction (writes need no undo).
  bool allocated_here(ObjectId oid) const;
  bool freed_here(ObjectId oid) const;

  /// Snapshot of an absolute pool range, used for header fields.
  void snapshot_absolute(std::uint64_t offset, std::uint64_t length);
  void write_absolute(std::uint64_t offset, std::span<const std::byte> bytes);

 private:
  friend class Pool;
  friend class detail::PoolState;

  void require_active(const char* op) const;
  bool covered(std::uint64_t begin, std::uint64_t end) const;
  void finish();

  detail::PoolState* pool_;
  TxState state_ = TxState::active;
  std::unordered_set<std::uint64_t> allocated_;
  std::vector<std::uint64_t> frees_;
  std::unordered_set<std::uint64_t> freed_set_;
  std::map<std::uint64_t, std::uint64_t> snapshotted_;  // begin -> end, disjoint
};

}  // namespace leds
