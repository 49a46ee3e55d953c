// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "leds/transaction.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <optional>
#include <random>

#include "leds/error.hpp"
#include "leds/pool.hpp"
#include "test_util.hpp"

namespace {

using leds::ErrorCode;
using leds::ObjectId;
using leds::Pool;
using leds::Transaction;
using leds::testing::ScratchDir;
using leds::testing::error_of;

constexpr std::uint64_t kMiB = 1ull << 20;

std::vector<std::byte> bytes_of(Pool& pool, ObjectId oid, std::uint64_t n) {
  std::vector<std::byte> out(n);
  pool.read(oid, 0, out);
  return out;
}

TEST(Transaction, AbortLeavesBytesUnchanged) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  ObjectId oid = pool.alloc(64, true);
  pool.store_value<std::uint64_t>(oid, 8, 99);
  auto before = bytes_of(pool, oid, 64);
  {
    Transaction tx(pool);
    tx.set<std::uint64_t>(oid, 8, 1234);
    tx.set<std::uint32_t>(oid, 40, 5);
    tx.abort();
  }
  EXPECT_EQ(bytes_of(pool, oid, 64), before);
}

TEST(Transaction, DestructorAborts) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  ObjectId oid = pool.alloc(16, true);
  {
    Transaction tx(pool);
    tx.set<std::uint64_t>(oid, 0, 7);
  }
  EXPECT_EQ(pool.load<std::uint64_t>(oid), 0u);
  EXPECT_EQ(pool.active_transaction(), nullptr);
}

TEST(Transaction, AbortReleasesAllocations) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  std::uint64_t live = pool.live_bytes();
  {
    Transaction tx(pool);
    tx.alloc_zeroed(100);
    tx.alloc_zeroed(24);
    tx.abort();
  }
  EXPECT_EQ(pool.live_bytes(), live);
}

TEST(Transaction, CommitIsDurable) {
  ScratchDir dir;
  ObjectId oid;
  std::vector<std::byte> shadow(32);
  {
    Pool pool = Pool::create(dir.file("p"), "L", kMiB);
    oid = pool.alloc(32, true);
    Transaction tx(pool);
    for (int i = 0; i < 32; i += 4) {
      std::uint32_t v = static_cast<std::uint32_t>(i * 31 + 1);
      tx.set(oid, static_cast<std::uint64_t>(i), v);
      std::memcpy(shadow.data() + i, &v, 4);
    }
    tx.commit();
    EXPECT_EQ(tx.state(), leds::TxState::committed);
  }
  Pool pool = Pool::open(dir.file("p"), "L");
  EXPECT_EQ(bytes_of(pool, oid, 32), shadow);
}

TEST(Transaction, SnapshotRestoresOnAbort) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  ObjectId oid = pool.alloc(24, true);
  pool.store_value<std::uint64_t>(oid, 0, 11);
  Transaction tx(pool);
  tx.snapshot(oid, 0, 24);
  pool.store_value<std::uint64_t>(oid, 0, 77);  // raw in-place overwrite
  tx.abort();
  EXPECT_EQ(pool.load<std::uint64_t>(oid), 11u);
}

TEST(Transaction, SnapshotLogGrowth) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  ObjectId oid = pool.alloc(24, true);
  Transaction tx(pool);
  auto before = pool.stats().bytes_log;
  tx.snapshot(oid, 0, 24);
  EXPECT_EQ(pool.stats().bytes_log - before, 24 + leds::undo::kRecordHeaderSize);
  // A covered range is not logged twice.
  tx.snapshot(oid, 8, 8);
  EXPECT_EQ(pool.stats().bytes_log - before, 24 + leds::undo::kRecordHeaderSize);
  tx.commit();
  EXPECT_EQ(error_of([&] { tx.snapshot(oid, 0, 8); }), ErrorCode::tx_state_error);
}

TEST(Transaction, SnapshotOutOfBounds) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  Transaction tx(pool);
  EXPECT_EQ(error_of([&] { tx.snapshot(ObjectId{pool.uuid(), 1ull << 30}, 0, 8); }),
            ErrorCode::out_of_bounds);
}

TEST(Transaction, AllocReadableZeros) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  Transaction tx(pool);
  ObjectId oid = tx.alloc_zeroed(24);
  for (auto b : bytes_of(pool, oid, 24)) EXPECT_EQ(b, std::byte{0});
  tx.commit();
}

TEST(Transaction, OperationsAfterFinishFail) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  Transaction tx(pool);
  tx.abort();
  EXPECT_EQ(error_of([&] { tx.alloc_zeroed(24); }), ErrorCode::tx_state_error);
  EXPECT_EQ(error_of([&] { tx.commit(); }), ErrorCode::tx_state_error);
  EXPECT_EQ(error_of([&] { tx.abort(); }), ErrorCode::tx_state_error);
}

TEST(Transaction, NestingRejected) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  Transaction tx(pool);
  EXPECT_EQ(error_of([&] { Transaction inner(pool); }), ErrorCode::nested_transaction);
  tx.commit();
  Transaction again(pool);
  again.commit();
}

TEST(Transaction, FreeIsDeferred) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  ObjectId oid = pool.alloc(48, true);
  pool.store_value<std::uint64_t>(oid, 0, 5);
  std::uint64_t live = pool.live_bytes();
  {
    Transaction tx(pool);
    tx.free(oid);
    EXPECT_EQ(error_of([&] { tx.free(oid); }), ErrorCode::double_free);
    EXPECT_TRUE(pool.is_allocated(oid));
    tx.abort();
  }
  EXPECT_EQ(pool.load<std::uint64_t>(oid), 5u);
  {
    Transaction tx(pool);
    tx.free(oid);
    tx.commit();
  }
  EXPECT_FALSE(pool.is_allocated(oid));
  EXPECT_EQ(pool.live_bytes(), live - Pool::usable_size(48));
}

TEST(Transaction, CopyBytes) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  ObjectId a = pool.alloc(64, true);
  for (std::uint64_t i = 0; i < 8; ++i) pool.store_value<std::uint64_t>(a, i * 8, i + 1);
  Transaction tx(pool);

  auto before = pool.stats();
  tx.copy_bytes(a, a, 0);
  auto same = pool.stats() - before;
  EXPECT_EQ(same.bytes_user + same.bytes_log + same.bytes_meta + same.translations, 0u);

  // Overlapping move right by one word.
  tx.copy_bytes(a, 8, a, 0, 56);
  for (std::uint64_t i = 1; i < 8; ++i) EXPECT_EQ(pool.load<std::uint64_t>(a, i * 8), i);
  EXPECT_EQ(pool.load<std::uint64_t>(a, 0), 1u);
  tx.commit();
}

TEST(TransactionCrash, TriggerBeyondRunCompletesNormally) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "L", kMiB);
  pool.arm_crash({1'000'000, true});
  ObjectId oid = pool.get_root(64);
  Transaction tx(pool);
  tx.set<std::uint64_t>(oid, 0, 3);
  tx.commit();
  EXPECT_EQ(pool.load<std::uint64_t>(oid), 3u);
}

TEST(TransactionCrash, RecoverOnCleanPoolMatchesOpen) {
  ScratchDir dir;
  ObjectId root;
  {
    Pool pool = Pool::create(dir.file("p"), "L", kMiB);
    root = pool.get_root(64);
    pool.store_value<std::uint64_t>(root, 0, 17);
  }
  std::uint64_t live;
  {
    Pool pool = Pool::open(dir.file("p"), "L");
    live = pool.live_bytes();
  }
  Pool pool = Pool::recover(dir.file("p"));
  EXPECT_EQ(pool.root(), root);
  EXPECT_EQ(pool.live_bytes(), live);
  EXPECT_EQ(pool.load<std::uint64_t>(root), 17u);
  EXPECT_EQ(pool.layout_name(), "L");
}

TEST(TransactionCrash, UncommittedAllocationIsReclaimed) {
  ScratchDir dir;
  std::uint64_t live_before;
  std::uint64_t writes_to_commit;
  // Find the ordinal of the commit-point write.
  {
    Pool pool = Pool::create(dir.file("probe"), "L", kMiB);
    pool.get_root(32);
    auto start = pool.persistent_writes();
    Transaction tx(pool);
    tx.alloc_zeroed(24);
    auto before_commit = pool.persistent_writes();
    tx.commit();
    writes_to_commit = before_commit - start + 1;
  }
  {
    Pool pool = Pool::create(dir.file("p"), "L", kMiB);
    pool.get_root(32);
    live_before = pool.live_bytes();
    pool.arm_crash({writes_to_commit, true});
    Transaction tx(pool);
    tx.alloc_zeroed(24);
    EXPECT_THROW(tx.commit(), leds::SimulatedCrash);
    EXPECT_FALSE(pool.is_open());
  }
  Pool pool = Pool::recover(dir.file("p"));
  EXPECT_EQ(pool.live_bytes(), live_before);
  EXPECT_EQ(pool.live_objects(), 1u);
}

TEST(TransactionCrash, RootSwapCopyRollsBack) {
  ScratchDir dir;
  std::vector<std::byte> old_root(64);
  ObjectId root;
  {
    Pool pool = Pool::create(dir.file("p"), "L", kMiB);
    root = pool.get_root(64);
    for (int i = 0; i < 64; ++i) old_root[i] = std::byte(i + 1);
    pool.store(root, 0, old_root);

    ObjectId temp;
    {
      Transaction tx(pool);
      temp = tx.alloc_zeroed(64);
      std::vector<std::byte> fresh(64, std::byte{0xAB});
      tx.write(temp, 0, fresh);
      tx.commit();
    }
    pool.arm_crash({3, true});  // snapshot record, log control, then the copy itself
    Transaction tx(pool);
    EXPECT_THROW(tx.copy_bytes(root, temp, 64), leds::SimulatedCrash);
  }
  Pool pool = Pool::recover(dir.file("p"));
  EXPECT_EQ(bytes_of(pool, root, 64), old_root);
}

// ---------------------------------------------------------------------------
// Crash sweep against a shadow model.
//
// The script keeps up to kSlots objects referenced from the root. Each
// transaction randomly allocates, rewrites, or frees slot objects. After a
// crash at write ordinal k, the recovered pool must equal the shadow state at
// the last committed boundary or (if the commit point was reached) the next.

constexpr int kSlots = 12;

struct Snapshot {
  std::vector<std::optional<std::vector<std::byte>>> slots;
  std::uint64_t live_bytes = 0;
  bool operator==(const Snapshot&) const = default;
};

Snapshot capture(Pool& pool) {
  Snapshot s;
  ObjectId root = pool.root();
  s.live_bytes = pool.live_bytes();
  for (int i = 0; i < kSlots; ++i) {
    auto id = pool.load<ObjectId>(root, static_cast<std::uint64_t>(i) * 16);
    if (id.is_null()) {
      s.slots.emplace_back();
      continue;
    }
    std::vector<std::byte> bytes(pool.load<std::uint64_t>(id));
    pool.read(id, 0, bytes);
    s.slots.emplace_back(std::move(bytes));
  }
  return s;
}

// Runs `txs` seeded transactions; records a snapshot after each commit.
void run_script(Pool& pool, std::uint64_t seed, int txs, std::vector<Snapshot>* boundaries,
                int* commits) {
  std::mt19937_64 rng(seed);
  ObjectId root = pool.get_root(kSlots * 16);
  if (boundaries) boundaries->push_back(capture(pool));
  for (int t = 0; t < txs; ++t) {
    Transaction tx(pool);
    int ops = 1 + static_cast<int>(rng() % 4);
    for (int o = 0; o < ops; ++o) {
      std::uint64_t slot = rng() % kSlots;
      auto current = pool.load<ObjectId>(root, slot * 16);
      switch (rng() % 3) {
        case 0: {  // replace with a fresh object
          if (current && !tx.freed_here(current)) tx.free(current);
          std::uint64_t size = 16 + rng() % 96;
          ObjectId fresh = tx.alloc_zeroed(size);
          std::vector<std::byte> payload(size);
          for (auto& b : payload) b = std::byte(rng());
          std::memcpy(payload.data(), &size, 8);
          tx.write(fresh, 0, payload);
          tx.set(root, slot * 16, fresh);
          break;
        }
        case 1: {  // rewrite part of an existing object
          if (!current || tx.freed_here(current)) break;
          std::uint64_t size = pool.load<std::uint64_t>(current);
          std::uint64_t off = 8 + rng() % (size - 8);
          std::uint8_t v = static_cast<std::uint8_t>(rng());
          tx.set(current, off, v);
          break;
        }
        default: {  // drop
          if (!current || tx.freed_here(current)) break;
          tx.free(current);
          tx.set(root, slot * 16, ObjectId::null());
          break;
        }
      }
    }
    tx.commit();
    if (commits) ++*commits;
    if (boundaries) boundaries->push_back(capture(pool));
  }
}

TEST(TransactionCrash, ExhaustiveSweepMatchesShadow) {
  ScratchDir dir;
  constexpr std::uint64_t kSeed = 99;
  constexpr int kTxs = 24;

  std::vector<Snapshot> boundaries;
  std::uint64_t total_writes = 0;
  {
    Pool pool = Pool::create(dir.file("clean"), "L", kMiB);
    auto start = pool.persistent_writes();
    run_script(pool, kSeed, kTxs, &boundaries, nullptr);
    total_writes = pool.persistent_writes() - start;
  }
  ASSERT_EQ(boundaries.size(), static_cast<std::size_t>(kTxs + 1));
  ASSERT_GT(total_writes, 100u);

  for (std::uint64_t k = 1; k <= total_writes + 1; ++k) {
    auto path = dir.file("run" + std::to_string(k));
    int commits = -1;  // the root allocation is not part of the boundary list
    bool crashed = false;
    {
      Pool pool = Pool::create(path, "L", kMiB);
      pool.arm_crash({k, true});
      try {
        commits = 0;
        run_script(pool, kSeed, kTxs, nullptr, &commits);
      } catch (const leds::SimulatedCrash&) {
        crashed = true;
      }
    }
    Pool pool = Pool::recover(path);
    if (pool.root().is_null()) {
      ASSERT_TRUE(crashed);
      ASSERT_EQ(pool.live_bytes(), 0u) << "k=" << k;
      continue;
    }
    Snapshot got = capture(pool);
    std::size_t lo = static_cast<std::size_t>(commits);
    bool ok = got == boundaries[lo] || (lo + 1 < boundaries.size() && got == boundaries[lo + 1]);
    ASSERT_TRUE(ok) << "crash ordinal " << k << " after " << commits << " commits";
    pool.close();
    Pool::remove(path);
  }
}

}  // namespace
