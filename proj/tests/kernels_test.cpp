// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include <map>
#include <random>

#include <gtest/gtest.h>

#include "leds/kernels.hpp"
#include "test_util.hpp"

namespace leds {

void PrintTo(KernelKind kind, std::ostream* os) { *os << to_string(kind); }

namespace {

using testing::error_of;
using testing::ScratchDir;

constexpr std::uint64_t kCap = 64ull << 20;

struct Case {
  KernelKind kind;
  Variant variant;
};

void PrintTo(const Case& c, std::ostream* os) { *os << to_string(c.kind) << '/' << to_string(c.variant); }

std::string case_name(const ::testing::TestParamInfo<Case>& info) {
  std::string s = std::string(to_string(info.param.kind)) + "_" + std::string(to_string(info.param.variant));
  for (char& c : s)
    if (c == '-') c = '_';
  return s;
}

std::vector<Case> all_cases() {
  std::vector<Case> out;
  for (KernelKind k : kAllKernels)
    for (Variant v : {Variant::original, Variant::manual_change, Variant::manual_add, Variant::auto_change,
                      Variant::auto_add})
      out.push_back({k, v});
  return out;
}

class KernelTest : public ::testing::TestWithParam<Case> {
 protected:
  void SetUp() override {
    pool_.emplace(Pool::create(dir_.file("p"), "map", kCap));
    rt_.emplace(*pool_);
    map_ = make_kernel(GetParam().kind, GetParam().variant, *rt_);
  }

  bool insert(std::uint64_t k, std::uint64_t v) {
    Transaction tx(*pool_);
    bool ok = map_->insert(tx, k, v);
    tx.commit();
    return ok;
  }
  bool remove(std::uint64_t k) {
    Transaction tx(*pool_);
    bool ok = map_->remove(tx, k);
    tx.commit();
    return ok;
  }
  void reopen() {
    map_.reset();
    rt_.reset();
    pool_.reset();
    pool_.emplace(Pool::open(dir_.file("p"), "map"));
    rt_.emplace(*pool_);
    map_ = make_kernel(GetParam().kind, GetParam().variant, *rt_);
  }

  ScratchDir dir_;
  std::optional<Pool> pool_;
  std::optional<ExtensionRuntime> rt_;
  std::unique_ptr<MapKernel> map_;
};

TEST_P(KernelTest, InsertLookupRemove) {
  EXPECT_EQ(map_->size(), 0u);
  EXPECT_FALSE(map_->lookup(5));
  EXPECT_TRUE(insert(5, 50));
  EXPECT_FALSE(insert(5, 51));
  EXPECT_EQ(map_->lookup(5), 50u);
  EXPECT_TRUE(insert(3, 30));
  EXPECT_TRUE(insert(9, 90));
  EXPECT_EQ(map_->size(), 3u);
  EXPECT_FALSE(remove(4));
  EXPECT_TRUE(remove(5));
  EXPECT_FALSE(map_->lookup(5));
  EXPECT_EQ(map_->size(), 2u);
  map_->validate();
  EXPECT_TRUE(remove(3));
  EXPECT_TRUE(remove(9));
  EXPECT_EQ(map_->size(), 0u);
  map_->validate();
}

TEST_P(KernelTest, FuzzAgainstStdMap) {
  std::mt19937_64 rng(42 + static_cast<int>(GetParam().kind));
  std::map<std::uint64_t, std::uint64_t> model;
  for (int i = 0; i < 2000; ++i) {
    std::uint64_t key = rng() % 300;
    std::uint64_t value = rng();
    switch (rng() % 3) {
      case 0:
        EXPECT_EQ(insert(key, value), model.emplace(key, value).second);
        break;
      case 1:
        EXPECT_EQ(remove(key), model.erase(key) == 1);
        break;
      default: {
        auto it = model.find(key);
        auto got = map_->lookup(key);
        ASSERT_EQ(got.has_value(), it != model.end());
        if (got) {
          EXPECT_EQ(*got, it->second);
        }
      }
    }
    ASSERT_NO_THROW(map_->validate()) << "op " << i;
    ASSERT_EQ(map_->size(), model.size());
  }
  auto entries = map_->entries();
  ASSERT_EQ(entries.size(), model.size());
  if (GetParam().kind != KernelKind::hashmap) {
    auto it = model.begin();
    for (auto& e : entries) {
      EXPECT_EQ(e.key, it->first);
      EXPECT_EQ(e.value, it->second);
      ++it;
    }
  }
}

TEST_P(KernelTest, NoLeaksAfterDrain) {
  insert(1, 1);
  remove(1);
  std::uint64_t baseline = pool_->live_objects();
  std::mt19937_64 rng(7);
  std::vector<std::uint64_t> keys;
  for (int i = 0; i < 400; ++i) keys.push_back(rng() % 100000);
  for (auto k : keys) insert(k, k);
  if (is_auto(GetParam().variant)) {
    Transaction tx(*pool_);
    map_->materialize_all(tx);
    tx.commit();
  }
  for (auto k : keys) remove(k);
  EXPECT_EQ(map_->size(), 0u);
  EXPECT_EQ(pool_->live_objects(), baseline);
}

TEST_P(KernelTest, AbortLeavesMapIntact) {
  for (std::uint64_t k = 0; k < 50; ++k) insert(k, k);
  {
    Transaction tx(*pool_);
    for (std::uint64_t k = 50; k < 100; ++k) map_->insert(tx, k, k);
    for (std::uint64_t k = 0; k < 25; ++k) map_->remove(tx, k);
  }
  map_->validate();
  EXPECT_EQ(map_->size(), 50u);
  for (std::uint64_t k = 0; k < 50; ++k) EXPECT_EQ(map_->lookup(k), k);
}

TEST_P(KernelTest, Persists) {
  for (std::uint64_t k = 0; k < 200; ++k) insert(k * 7, k);
  reopen();
  map_->validate();
  EXPECT_EQ(map_->size(), 200u);
  for (std::uint64_t k = 0; k < 200; ++k) EXPECT_EQ(map_->lookup(k * 7), k);
}

TEST_P(KernelTest, WideKeys) {
  std::uint64_t wide = (1ull << 40) + 3;
  Variant v = GetParam().variant;
  if (v == Variant::manual_change || v == Variant::auto_change) {
    EXPECT_TRUE(insert(wide, 1));
    EXPECT_TRUE(insert(3, 2));
    EXPECT_EQ(map_->lookup(wide), 1u);
    EXPECT_EQ(map_->lookup(3), 2u);
    map_->validate();
  } else {
    EXPECT_EQ(error_of([&] { insert(wide, 1); }), ErrorCode::invalid_argument);
  }
}

INSTANTIATE_TEST_SUITE_P(All, KernelTest, ::testing::ValuesIn(all_cases()), case_name);

class UpgradeTest : public ::testing::TestWithParam<KernelKind> {
 protected:
  void build(std::uint64_t n) {
    Pool pool = Pool::create(path(), "map", kCap);
    pool.set_layout_version(kOriginalVersion);
    ExtensionRuntime rt(pool);
    auto map = make_kernel(GetParam(), Variant::original, rt);
    Transaction tx(pool);
    for (std::uint64_t k = 0; k < n; ++k) map->insert(tx, k * 3 + 1, k);
    tx.commit();
  }
  std::filesystem::path path() const { return dir_.file("p"); }
  ScratchDir dir_;
};


TEST_P(UpgradeTest, ManualMigrationRewritesEveryRecord) {
  constexpr std::uint64_t n = 500;
  for (LayoutChange change : {LayoutChange::change, LayoutChange::add}) {
    build(n);
    {
      Pool pool = Pool::open(path(), "map");
      std::uint64_t nodes = n;
      if (GetParam() == KernelKind::ctree) nodes = n - 1;
      if (GetParam() == KernelKind::btree) nodes = pool.live_objects() - 1;  // all but the root
      MigrationStats stats = run_migration(pool, make_manual_migrator(GetParam(), change));
      EXPECT_EQ(stats.nodes_migrated, nodes);
      std::uint64_t node_size = manual_record_size(GetParam(), change);
      if (GetParam() == KernelKind::ctree) node_size = 4 + 2 * node_size;
      if (GetParam() == KernelKind::btree) node_size = 4 + 8 * node_size + 8 * 16;
      EXPECT_EQ(stats.node_bytes, nodes * node_size);
      ExtensionRuntime rt(pool);
      auto map = make_kernel(GetParam(), manual_variant(change), rt);
      map->validate();
      ASSERT_EQ(map->size(), n);
      for (std::uint64_t k = 0; k < n; ++k) ASSERT_EQ(map->lookup(k * 3 + 1), k);
      Transaction tx(pool);
      EXPECT_TRUE(map->insert(tx, 2, 2));
      EXPECT_TRUE(map->remove(tx, 1));
      tx.commit();
      map->validate();
    }
    Pool::remove(path());
  }
}

TEST_P(UpgradeTest, AutomaticUpgradesLazily) {
  constexpr std::uint64_t n = 300;
  build(n);
  Pool pool = Pool::open(path(), "map");
  ExtensionRuntime rt(pool);
  auto map = make_kernel(GetParam(), Variant::auto_add, rt);
  EXPECT_EQ(map->extended_records(), 0u);
  map->validate();
  EXPECT_EQ(map->lookup(4), 1u);
  EXPECT_EQ(map->extended_records(), 0u);
  auto names = map->entries(true);
  EXPECT_EQ(names.size(), n);
  EXPECT_EQ(map->extended_records(), n);
  for (auto& e : names) EXPECT_EQ(e.name, Name{});
}

TEST_P(UpgradeTest, AutomaticChangeMaterializesOnKeyRead) {
  constexpr std::uint64_t n = 300;
  build(n);
  Pool pool = Pool::open(path(), "map");
  ExtensionRuntime rt(pool);
  auto map = make_kernel(GetParam(), Variant::auto_change, rt);
  WriteStats before = pool.stats();
  EXPECT_EQ(map->lookup(4), 1u);
  WriteStats d = pool.stats() - before;
  EXPECT_GE(d.allocations, 1u);
  EXPECT_EQ(d.migration_bytes, 40 * d.allocations);
  EXPECT_EQ(map->extended_records(), d.allocations);
  Transaction tx(pool);
  map->materialize_all(tx);
  tx.commit();
  EXPECT_EQ(map->extended_records(), n);
  map->validate();
  for (std::uint64_t k = 0; k < n; ++k) ASSERT_EQ(map->lookup(k * 3 + 1), k);
}

INSTANTIATE_TEST_SUITE_P(All, UpgradeTest, ::testing::ValuesIn(kAllKernels),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Kernels, HashmapManualMigrationBytes) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "map", kCap);
  pool.set_layout_version(kOriginalVersion);
  ExtensionRuntime rt(pool);
  {
    auto map = make_kernel(KernelKind::hashmap, Variant::original, rt);
    Transaction tx(pool);
    for (std::uint64_t k : {1, 2, 3}) map->insert(tx, k, k);
    tx.commit();
  }
  auto stats = run_migration(pool, make_manual_migrator(KernelKind::hashmap, LayoutChange::change));
  EXPECT_EQ(stats.node_bytes, 120u);
}

TEST(Kernels, RecordSizes) {
  EXPECT_EQ(manual_record_size(KernelKind::hashmap, LayoutChange::change), 40u);
  EXPECT_EQ(manual_record_size(KernelKind::skiplist, LayoutChange::change), 88u);
  EXPECT_EQ(manual_record_size(KernelKind::rbtree, LayoutChange::change), 76u);
  EXPECT_EQ(manual_record_size(KernelKind::ctree, LayoutChange::change), 24u);
  EXPECT_EQ(manual_record_size(KernelKind::hashmap, LayoutChange::add), 52u);
  EXPECT_EQ(record_type(KernelKind::hashmap, Variant::original).record_size(), 52u);
  EXPECT_EQ(record_type(KernelKind::skiplist, Variant::original).record_size(), 100u);
  EXPECT_EQ(record_type(KernelKind::rbtree, Variant::original).record_size(), 88u);
  EXPECT_EQ(record_type(KernelKind::btree, Variant::original).record_size(), 36u);
}

TEST(Kernels, Names) {
  for (KernelKind k : kAllKernels) EXPECT_EQ(parse_kernel(to_string(k)), k);
  EXPECT_EQ(error_of([] { parse_kernel("trie"); }), ErrorCode::config_error);
  EXPECT_EQ(parse_layout_change("add"), LayoutChange::add);
  EXPECT_EQ(error_of([] { parse_layout_change("x"); }), ErrorCode::config_error);
}

TEST(Kernels, BtreeScanIsSorted) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "map", kCap);
  ExtensionRuntime rt(pool);
  auto map = make_kernel(KernelKind::btree, Variant::original, rt);
  std::mt19937_64 rng(3);
  std::map<std::uint64_t, std::uint64_t> model;
  Transaction tx(pool);
  while (model.size() < 100) {
    std::uint64_t k = rng() % 10000;
    if (model.emplace(k, k).second) map->insert(tx, k, k);
  }
  tx.commit();
  auto entries = map->entries();
  ASSERT_EQ(entries.size(), 100u);
  auto it = model.begin();
  for (auto& e : entries) EXPECT_EQ(e.key, (it++)->first);
}

TEST(Kernels, ShallowCopyModeKeepsStructures) {
  for (KernelKind kind : {KernelKind::ctree, KernelKind::btree}) {
    ScratchDir dir;
    Pool pool = Pool::create(dir.file("p"), "map", kCap);
    ExtensionRuntime rt(pool);
    rt.set_copy_mode(CopyMode::shallow);
    auto map = make_kernel(kind, Variant::auto_change, rt);
    std::uint64_t baseline = pool.live_objects();
    for (std::uint64_t k = 0; k < 300; ++k) {
      Transaction tx(pool);
      map->insert(tx, k * 11, k);
      tx.commit();
    }
    map->validate();
    EXPECT_EQ(pool.stats().deep_copies, 0u);
    for (std::uint64_t k = 0; k < 300; ++k) {
      Transaction tx(pool);
      ASSERT_TRUE(map->remove(tx, k * 11));
      tx.commit();
      if (k % 50 == 0) map->validate();
    }
    EXPECT_EQ(pool.live_objects(), baseline);
  }
}

}  // namespace
}  // namespace leds
