// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <vector>

#include "leds/error.hpp"
#include "leds/object_id.hpp"
#include "leds/pool.hpp"
#include "leds/transaction.hpp"
#include "leds/write_stats.hpp"

namespace leds::detail {

enum class Category { user, log, meta };

// Block header preceding every payload: u32 magic, u32 state, u64 class bytes.
inline constexpr std::uint32_t kBlockMagic = 0x4B4C4248;  // "HBLK"
inline constexpr std::uint32_t kBlockAllocated = 1;
inline constexpr std::uint32_t kBlockFree = 2;

class PoolState {
 public:
  PoolState() = default;
  PoolState(const PoolState&) = delete;
  PoolState& operator=(const PoolState&) = delete;
  ~PoolState();

  // --- lifecycle -----------------------------------------------------------
  void map_file(const std::filesystem::path& path, bool create, std::uint64_t file_size);
  void load_header();
  void recover_log();
  void scan_heap();
  void close() noexcept;
  bool open() const noexcept { return base_ != nullptr; }
  void ensure_open() const {
    if (base_ == nullptr) throw Error(ErrorCode::pool_closed, "pool handle is closed");
  }

  // --- raw access ----------------------------------------------------------
  std::byte* at(std::uint64_t absolute) const noexcept { return base_ + absolute; }
  template <typename T>
  T get(std::uint64_t absolute) const noexcept {
    T v;
    std::memcpy(&v, base_ + absolute, sizeof(T));
    return v;
  }

  /// The only path that stores into the mapping: counts bytes and crash ordinals.
  void persist(std::uint64_t absolute, const void* src, std::uint64_t length, Category category);
  void persist_zero(std::uint64_t absolute, std::uint64_t length, Category category);
  template <typename T>
  void persist_value(std::uint64_t absolute, const T& value, Category category) {
    persist(absolute, &value, sizeof(T), category);
  }

  std::byte* translate(ObjectId oid);
  void check_range(ObjectId oid, std::uint64_t offset, std::uint64_t length);
  bool in_heap(std::uint64_t absolute) const noexcept {
    return absolute >= heap_offset_ + kBlockHeaderSize && absolute < heap_offset_ + frontier_;
  }

  // --- allocator -----------------------------------------------------------
  ObjectId alloc(std::uint64_t size, bool zeroed, Transaction* tx);
  /// Immediately releases an allocated block.
  void release(std::uint64_t payload);
  bool block_allocated(std::uint64_t payload) const noexcept;
  std::uint64_t block_bytes(std::uint64_t payload) const noexcept {
    return get<std::uint64_t>(payload - kBlockHeaderSize + 8);
  }

  // --- undo log ------------------------------------------------------------
  void log_append(std::uint32_t type, std::uint64_t absolute, std::uint64_t length,
                  const std::byte* data);
  std::uint64_t log_used() const noexcept { return log_used_; }
  void commit_log();
  void rollback_log();

  void crash_now();

  // --- identity ------------------------------------------------------------
  std::filesystem::path path;
  std::uint64_t uuid = 0;
  WriteStats stats;
  Transaction* active_tx = nullptr;
  std::uint64_t tx_epoch = 0;  // bumped on every transaction begin and end

  bool crash_armed = false;
  std::uint64_t crash_trigger = 0;
  std::uint64_t writes_since_arm = 0;
  std::uint64_t writes_total = 0;

  std::uint64_t heap_offset_ = header::kSize;
  std::uint64_t capacity_ = 0;
  std::uint64_t frontier_ = 0;
  std::uint64_t log_offset_ = 0;
  std::uint64_t log_capacity_ = 0;
  std::uint64_t log_used_ = 0;
  std::uint64_t live_bytes_ = 0;
  std::uint64_t live_objects_ = 0;

 private:
  void apply_undo(bool runtime);
  void apply_frees(bool runtime);
  void write_log_control(std::uint64_t state, std::uint64_t used);
  std::size_t class_index(std::uint64_t bytes) const noexcept;

  int fd_ = -1;
  int lock_fd_ = -1;
  std::filesystem::path lock_path_;
  std::byte* base_ = nullptr;
  std::uint64_t file_size_ = 0;
  std::vector<std::vector<std::uint64_t>> free_lists_;
  std::vector<std::byte> scratch_;
};

}  // namespace leds::detail
