// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "leds/transaction.hpp"

#include <algorithm>
#include <vector>

#include "leds/error.hpp"
#include "leds/pool.hpp"
#include "pool_state.hpp"

namespace leds {

using detail::Category;

Transaction::Transaction(Pool& pool) : pool_(&pool.state()) {
  pool_->ensure_open();
  if (pool_->active_tx != nullptr)
    throw Error(ErrorCode::nested_transaction, "a transaction is already active on this pool");
  pool_->active_tx = this;
  ++pool_->tx_epoch;
}

Transaction::~Transaction() {
  if (state_ != TxState::active) return;
  if (pool_->open() && pool_->active_tx == this) {
    try {
      abort();
      return;
    } catch (...) {
      // A crash during rollback leaves recovery to the next open.
    }
  }
  state_ = TxState::aborted;
  if (pool_->active_tx == this) {
    pool_->active_tx = nullptr;
    ++pool_->tx_epoch;
  }
}

void Transaction::require_active(const char* op) const {
  if (state_ != TxState::active)
    throw Error(ErrorCode::tx_state_error, std::string(op) + " on a finished transaction");
  pool_->ensure_open();
}

void Transaction::finish() {
  pool_->active_tx = nullptr;
  ++pool_->tx_epoch;
  allocated_.clear();
  frees_.clear();
  freed_set_.clear();
  snapshotted_.clear();
}

void Transaction::commit() {
  require_active("commit");
  pool_->commit_log();
  state_ = TxState::committed;
  finish();
}

void Transaction::abort() {
  require_active("abort");
  pool_->rollback_log();
  state_ = TxState::aborted;
  finish();
}

bool Transaction::covered(std::uint64_t begin, std::uint64_t end) const {
  auto it = snapshotted_.upper_bound(begin);
  if (it == snapshotted_.begin()) return false;
  --it;
  return it->second >= end;
}

void Transaction::snapshot_absolute(std::uint64_t offset, std::uint64_t length) {
  require_active("snapshot");
  if (length == 0) return;
  std::uint64_t end = offset + length;
  if (covered(offset, end)) return;
  pool_->log_append(undo::kSnapshot, offset, length, pool_->at(offset));

  // Merge [offset, end) into the disjoint interval set.
  auto it = snapshotted_.upper_bound(offset);
  if (it != snapshotted_.begin()) {
    auto prev = std::prev(it);
    if (prev->second >= offset) it = prev;
  }
  std::uint64_t lo = offset, hi = end;
  while (it != snapshotted_.end() && it->first <= hi) {
    lo = std::min(lo, it->first);
    hi = std::max(hi, it->second);
    it = snapshotted_.erase(it);
  }
  snapshotted_.emplace(lo, hi);
}

void Transaction::snapshot(ObjectId oid, std::uint64_t offset, std::uint64_t length) {
  require_active("snapshot");
  pool_->check_range(oid, offset, length);
  snapshot_absolute(oid.offset + offset, length);
}

void Transaction::write(ObjectId oid, std::uint64_t offset, std::span<const std::byte> bytes) {
  require_active("write");
  pool_->check_range(oid, offset, bytes.size());
  std::uint64_t at = oid.offset + offset;
  if (!allocated_here(oid)) snapshot_absolute(at, bytes.size());
  pool_->persist(at, bytes.data(), bytes.size(), Category::user);
}

void Transaction::write_absolute(std::uint64_t offset, std::span<const std::byte> bytes) {
  require_active("write");
  snapshot_absolute(offset, bytes.size());
  pool_->persist(offset, bytes.data(), bytes.size(), Category::meta);
}

void Transaction::fill_zero(ObjectId oid, std::uint64_t offset, std::uint64_t length) {
  require_active("write");
  if (length == 0) return;
  pool_->check_range(oid, offset, length);
  std::uint64_t at = oid.offset + offset;
  if (!allocated_here(oid)) snapshot_absolute(at, length);
  pool_->persist_zero(at, length, Category::user);
}

ObjectId Transaction::alloc_zeroed(std::uint64_t size) {
  require_active("alloc");
  ObjectId id = pool_->alloc(size, true, this);
  allocated_.insert(id.offset);
  return id;
}

void Transaction::free(ObjectId oid) {
  require_active("free");
  if (oid.pool_uuid != pool_->uuid)
    throw Error(oid.is_null() ? ErrorCode::out_of_bounds : ErrorCode::foreign_pool,
                "free of an ObjectId outside this pool");
  if (!pool_->block_allocated(oid.offset) || freed_set_.contains(oid.offset))
    throw Error(ErrorCode::double_free, "object is not allocated");
  pool_->log_append(undo::kFree, oid.offset, 0, nullptr);
  freed_set_.insert(oid.offset);
  frees_.push_back(oid.offset);
}

void Transaction::copy_bytes(ObjectId dst, ObjectId src, std::uint64_t length) {
  copy_bytes(dst, 0, src, 0, length);
}

void Transaction::copy_bytes(ObjectId dst, std::uint64_t dst_offset, ObjectId src,
                             std::uint64_t src_offset, std::uint64_t length) {
  if (length == 0) return;
  require_active("copy");
  pool_->check_range(src, src_offset, length);
  std::vector<std::byte> buffer(pool_->at(src.offset + src_offset),
                                pool_->at(src.offset + src_offset) + length);
  write(dst, dst_offset, buffer);
}

bool Transaction::allocated_here(ObjectId oid) const { return allocated_.contains(oid.offset); }

bool Transaction::freed_here(ObjectId oid) const { return freed_set_.contains(oid.offset); }

}  // namespace leds
