// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "leds/extendible.hpp"
#include "leds/runtime.hpp"
#include "leds/schema_manifest.hpp"
#include "test_util.hpp"

namespace {

using namespace leds;
using leds::testing::error_of;
using leds::testing::ScratchDir;

constexpr std::uint64_t kMiB = 1ull << 20;

// LL {val:int32, next:ObjectId} with the Fig.-3 style {val_dbl: double} extension.
TypeDescriptor linked_list_v1() {
  return define_type("LL", packed({{"val", 4}, {"next", 16, FieldKind::object_id}}));
}

TypeDescriptor linked_list_v2() {
  return append_extension(linked_list_v1(), packed({{"val_dbl", 8}}), init::int_to_f64("val"));
}

TypeDescriptor two_levels() {
  auto d = append_extension(linked_list_v1(), packed({{"wide", 8}}), init::widen("val"));
  return append_extension(d, packed({{"tag", 16, FieldKind::bytes}}), init::zero());
}

struct Fixture : ::testing::Test {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "LL", 4 * kMiB);
  ExtensionRuntime rt{pool};

  ObjectId make_node(const TypeDescriptor& d, std::int32_t val) {
    ObjectId id = pool.alloc(d.base_size(), true);
    pool.store_value(id, 0, val);
    return id;
  }
};

TEST(TypeDescriptor, BaseLayoutAddsTrailingLink) {
  auto d = linked_list_v1();
  EXPECT_EQ(d.link_offset(), 20u);
  EXPECT_EQ(d.record_size(), 36u);
  EXPECT_EQ(d.base_size(), 48u);
  EXPECT_EQ(d.max_level(), 0u);
}

TEST(TypeDescriptor, ExtensionRecordSize) {
  auto d = linked_list_v2();
  ASSERT_EQ(d.max_level(), 1u);
  EXPECT_EQ(d.extension(1).record_size(), 24u);
  EXPECT_EQ(d.extension(1).link_offset(), 8u);
  FieldHandle h = d.field("val_dbl");
  EXPECT_EQ(h.level, 1u);
  EXPECT_EQ(h.offset, 0u);
}

TEST(TypeDescriptor, AppendRules) {
  auto d = linked_list_v2();
  EXPECT_EQ(error_of([&] { append_extension(d, packed({{"x", 8}}), {}, 3u); }),
            ErrorCode::non_contiguous_level);
  EXPECT_EQ(append_extension(d, packed({{"x", 8}}), {}, 2u).max_level(), 2u);
  EXPECT_EQ(error_of([&] { append_extension(d, {}, {}); }), ErrorCode::invalid_argument);
  EXPECT_EQ(error_of([&] { append_extension(d, packed({{"val", 8}}), {}); }),
            ErrorCode::overlapping_fields);
  EXPECT_EQ(error_of([&] { d.field("nope"); }), ErrorCode::no_such_field);
  EXPECT_EQ(error_of([&] { d.extension(2); }), ErrorCode::unknown_level);
}

TEST(TypeDescriptor, OverlappingFieldsRejected) {
  EXPECT_EQ(error_of([&] {
              define_type("T", {{"a", 0, 8, FieldKind::scalar}, {"b", 4, 8, FieldKind::scalar}});
            }),
            ErrorCode::overlapping_fields);
  EXPECT_EQ(error_of([&] { define_type("T", {{"a", 0, 0, FieldKind::scalar}}); }),
            ErrorCode::overlapping_fields);
  // Gaps are fine; the link follows the furthest field.
  auto d = define_type("T", {{"b", 16, 4, FieldKind::scalar}, {"a", 0, 4, FieldKind::scalar}});
  EXPECT_EQ(d.link_offset(), 20u);
}

TEST(TypeDescriptor, FingerprintIgnoresExtensions) {
  auto v1 = linked_list_v1();
  EXPECT_NE(v1.fingerprint(), 0u);
  EXPECT_EQ(linked_list_v2().fingerprint(), v1.fingerprint());
  EXPECT_EQ(two_levels().fingerprint(), v1.fingerprint());
  auto removed = define_type("LL", packed({{"val", 4}}));
  EXPECT_NE(removed.fingerprint(), v1.fingerprint());
  auto widened = define_type("LL", packed({{"val", 8}, {"next", 16, FieldKind::object_id}}));
  EXPECT_NE(widened.fingerprint(), v1.fingerprint());
}

TEST_F(Fixture, EnsureExtensionWritesFortyBytes) {
  auto d = linked_list_v2();
  ObjectId node = make_node(d, 7);
  Transaction tx(pool);
  auto before = pool.stats();
  ObjectId ext = rt.ensure_extension(tx, node, d, 1);
  auto delta = pool.stats() - before;
  EXPECT_FALSE(ext.is_null());
  EXPECT_EQ(delta.allocations, 1u);
  EXPECT_EQ(delta.bytes_user, 40u);
  EXPECT_EQ(delta.migration_bytes, 40u);
  EXPECT_EQ(delta.checks, 1u);

  before = pool.stats();
  EXPECT_EQ(rt.ensure_extension(tx, node, d, 1), ext);
  delta = pool.stats() - before;
  EXPECT_EQ(delta.allocations, 0u);
  EXPECT_EQ(delta.bytes_user, 0u);
  tx.commit();
  EXPECT_EQ(pool.load<ObjectId>(node, d.link_offset()), ext);
  EXPECT_EQ(pool.load<double>(ext), 7.0);
}

TEST_F(Fixture, EnsureLevelZeroAndUnknownLevel) {
  auto d = linked_list_v2();
  ObjectId node = make_node(d, 1);
  Transaction tx(pool);
  EXPECT_EQ(rt.ensure_extension(tx, node, d, 0), node);
  EXPECT_EQ(error_of([&] { rt.ensure_extension(tx, node, d, 2); }), ErrorCode::unknown_level);
}

TEST_F(Fixture, EnsureSecondLevelBuildsChain) {
  auto d = two_levels();
  ObjectId node = make_node(d, 0x1234);
  Transaction tx(pool);
  auto before = pool.stats();
  ObjectId ext2 = rt.ensure_extension(tx, node, d, 2);
  EXPECT_EQ((pool.stats() - before).allocations, 2u);
  tx.commit();

  ObjectId ext1 = pool.load<ObjectId>(node, d.link_offset());
  ASSERT_FALSE(ext1.is_null());
  EXPECT_EQ(pool.load<ObjectId>(ext1, d.extension(1).link_offset()), ext2);
  EXPECT_TRUE(pool.load<ObjectId>(ext2, d.extension(2).link_offset()).is_null());
  EXPECT_EQ(pool.load<std::uint64_t>(ext1), 0x1234u);
  EXPECT_EQ(rt.extension_depth(node, d), 2u);
}

TEST_F(Fixture, ReadMaterializesInitValue) {
  auto d = linked_list_v2();
  ObjectId node = make_node(d, 7);
  EXPECT_EQ(rt.read<double>(node, d, "val_dbl"), 7.0);
  EXPECT_EQ(pool.active_transaction(), nullptr);
  EXPECT_EQ(rt.extension_depth(node, d), 1u);

  ObjectId neg = make_node(d, -3);
  EXPECT_EQ(rt.read<double>(neg, d, "val_dbl"), -3.0);
}

TEST_F(Fixture, BaseReadsAreLazy) {
  auto d = linked_list_v2();
  ObjectId node = make_node(d, 9);
  auto before = pool.stats();
  EXPECT_EQ(rt.read<std::int32_t>(node, d, "val"), 9);
  auto delta = pool.stats() - before;
  EXPECT_EQ(delta.allocations, 0u);
  EXPECT_EQ(delta.checks, 0u);
  EXPECT_EQ(rt.extension_depth(node, d), 0u);
}

TEST_F(Fixture, RepeatedReadsAllocateOnce) {
  auto d = linked_list_v2();
  ObjectId node = make_node(d, 5);
  FieldHandle h = d.field("val_dbl");
  auto before = pool.stats();
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(rt.read<double>(node, d, h), 5.0);
  auto delta = pool.stats() - before;
  EXPECT_EQ(delta.allocations, 1u);
  EXPECT_EQ(delta.checks, 1000u);
}

TEST_F(Fixture, WritesNeedTransactionUntilExtended) {
  auto d = linked_list_v2();
  ObjectId node = make_node(d, 5);
  EXPECT_EQ(error_of([&] { rt.write(node, d, "val_dbl", 2.5); }), ErrorCode::tx_required);
  EXPECT_EQ(rt.extension_depth(node, d), 0u);
  {
    Transaction tx(pool);
    rt.write(node, d, "val_dbl", 2.5);
    tx.commit();
  }
  EXPECT_EQ(rt.read<double>(node, d, "val_dbl"), 2.5);
  rt.write(node, d, "val_dbl", 4.5);  // already extended
  EXPECT_EQ(rt.read<double>(node, d, "val_dbl"), 4.5);
  rt.write(node, d, "val", std::int32_t{11});
  EXPECT_EQ(pool.load<std::int32_t>(node), 11);
}

TEST_F(Fixture, AbortedMaterializationLeavesNoTrace) {
  auto d = linked_list_v2();
  ObjectId node = make_node(d, 5);
  std::uint64_t live = pool.live_bytes();
  {
    Transaction tx(pool);
    rt.ensure_extension(tx, node, d, 1);
    tx.abort();
  }
  EXPECT_EQ(rt.extension_depth(node, d), 0u);
  EXPECT_EQ(pool.live_bytes(), live);
}

TEST_F(Fixture, DeepCopyUnextended) {
  auto d = linked_list_v2();
  ObjectId node = make_node(d, 5);
  auto objects = pool.live_objects();
  Transaction tx(pool);
  ObjectId copy = rt.deep_copy(tx, node, d);
  tx.commit();
  EXPECT_EQ(pool.live_objects(), objects + 1);
  EXPECT_TRUE(pool.load<ObjectId>(copy, d.link_offset()).is_null());
  EXPECT_EQ(pool.load<std::int32_t>(copy), 5);
}

TEST_F(Fixture, DeepCopyClonesChain) {
  auto d = two_levels();
  ObjectId node = make_node(d, 5);
  {
    Transaction tx(pool);
    rt.ensure_extension(tx, node, d, 2);
    tx.commit();
  }
  auto objects = pool.live_objects();
  auto before = pool.stats();
  ObjectId copy;
  {
    Transaction tx(pool);
    copy = rt.deep_copy(tx, node, d, CopyMode::deep);
    tx.commit();
  }
  EXPECT_EQ(pool.live_objects(), objects + 3);
  EXPECT_EQ((pool.stats() - before).deep_copies, 1u);
  EXPECT_EQ(rt.extension_depth(copy, d), 2u);
  EXPECT_NE(pool.load<ObjectId>(copy, d.link_offset()), pool.load<ObjectId>(node, d.link_offset()));

  {
    Transaction tx(pool);
    rt.write(copy, d, "wide", std::uint64_t{77});
    rt.write(copy, d, "tag", std::uint64_t{0xFF});
    tx.commit();
  }
  EXPECT_EQ(rt.read<std::uint64_t>(node, d, "wide"), 5u);
  EXPECT_EQ(rt.read<std::uint64_t>(node, d, "tag"), 0u);
  EXPECT_EQ(rt.read<std::uint64_t>(copy, d, "wide"), 77u);
}

TEST_F(Fixture, ShallowCopySharesLinks) {
  auto d = linked_list_v2();
  ObjectId node = make_node(d, 5);
  rt.read<double>(node, d, "val_dbl");
  auto objects = pool.live_objects();
  Transaction tx(pool);
  ObjectId copy = rt.deep_copy(tx, node, d, CopyMode::shallow);
  tx.commit();
  EXPECT_EQ(pool.live_objects(), objects + 1);
  EXPECT_EQ(pool.load<ObjectId>(copy, d.link_offset()), pool.load<ObjectId>(node, d.link_offset()));
}

TEST_F(Fixture, FreeExtendibleCascades) {
  auto d = linked_list_v2();
  ObjectId node = make_node(d, 5);
  rt.read<double>(node, d, "val_dbl");
  auto live = pool.live_bytes();
  {
    Transaction tx(pool);
    rt.free_extendible(tx, node, d);
    EXPECT_EQ(error_of([&] { rt.free_extendible(tx, node, d); }), ErrorCode::double_free);
    tx.commit();
  }
  EXPECT_EQ(live - pool.live_bytes(), Pool::usable_size(48) + Pool::usable_size(24));
  EXPECT_EQ(error_of([&] {
              Transaction tx(pool);
              rt.free_extendible(tx, node, d);
            }),
            ErrorCode::double_free);

  ObjectId plain = make_node(d, 1);
  live = pool.live_bytes();
  Transaction tx(pool);
  rt.free_extendible(tx, plain, d);
  tx.commit();
  EXPECT_EQ(live - pool.live_bytes(), Pool::usable_size(48));
}

TEST_F(Fixture, ReleaseExtensionsNullsLink) {
  auto d = two_levels();
  ObjectId node = make_node(d, 5);
  rt.read<std::uint64_t>(node, d, "tag");
  auto live = pool.live_bytes();
  Transaction tx(pool);
  rt.release_extensions(tx, node, d);
  tx.commit();
  EXPECT_EQ(rt.extension_depth(node, d), 0u);
  EXPECT_EQ(live - pool.live_bytes(), Pool::usable_size(24) + Pool::usable_size(32));
}

TEST_F(Fixture, TranslationCacheCountsMisses) {
  auto d = linked_list_v2();
  ObjectId node = make_node(d, 5);
  rt.read<double>(node, d, "val_dbl");
  FieldHandle h = d.field("val_dbl");

  auto run = [&](bool cache) {
    rt.set_translation_cache(cache);
    Transaction tx(pool);
    auto before = pool.stats();
    for (int i = 0; i < 1000; ++i) rt.read<double>(node, d, h);
    auto delta = pool.stats() - before;
    tx.commit();
    return delta.translations;
  };
  std::uint64_t with_cache = run(true);
  EXPECT_EQ(with_cache, 2u);  // base record and its extension
  std::uint64_t without = run(false);
  EXPECT_EQ(without, 2000u);
  EXPECT_GE(without, with_cache);
}

TEST_F(Fixture, TranslationCacheClearedAtTransactionBoundary) {
  auto d = linked_list_v1();
  ObjectId node = make_node(d, 5);
  FieldHandle h = d.field("val");
  rt.set_translation_cache(true);
  {
    Transaction tx(pool);
    auto before = pool.stats().translations;
    rt.read<std::int32_t>(node, d, h);
    rt.read<std::int32_t>(node, d, h);
    EXPECT_EQ(pool.stats().translations - before, 1u);
    tx.commit();
  }
  Transaction tx(pool);
  auto before = pool.stats().translations;
  rt.read<std::int32_t>(node, d, h);
  EXPECT_EQ(pool.stats().translations - before, 1u);
  tx.commit();
}

TEST_F(Fixture, UncheckedTranslationStillCounts) {
  auto d = linked_list_v1();
  ObjectId node = make_node(d, 5);
  rt.set_unchecked_translation(true);
  auto before = pool.stats().translations;
  EXPECT_EQ(rt.read<std::int32_t>(node, d, "val"), 5);
  EXPECT_EQ(pool.stats().translations - before, 1u);
}

// Embedded records: an object holding two extendible entries back to back.
struct EmbeddedFixture : Fixture {
  TypeDescriptor entry = append_extension(
      define_type("entry", packed({{"key", 4}, {"value", 16, FieldKind::object_id}})),
      packed({{"key64", 8}}), init::widen("key"));
  std::uint64_t stride = entry.record_size();  // 36

  ObjectId make_holder(std::uint32_t k0, std::uint32_t k1) {
    ObjectId holder = pool.alloc(stride * 2, true);
    pool.store_value(holder, 0, k0);
    pool.store_value(holder, stride, k1);
    return holder;
  }
};

TEST_F(EmbeddedFixture, EnsureOnEmbeddedRecord) {
  ObjectId holder = make_holder(3, 4);
  EXPECT_EQ(rt.read<std::uint64_t>(RecordRef{holder, stride}, entry, "key64"), 4u);
  EXPECT_EQ(rt.extension_depth(RecordRef{holder, 0}, entry), 0u);
  EXPECT_EQ(rt.extension_depth(RecordRef{holder, stride}, entry), 1u);
  EXPECT_EQ(rt.read<std::uint64_t>(RecordRef{holder, 0}, entry, "key64"), 3u);
}

TEST_F(EmbeddedFixture, DeepPutClonesAndReleasesSource) {
  ObjectId holder = make_holder(3, 4);
  rt.read<std::uint64_t>(RecordRef{holder, 0}, entry, "key64");
  ObjectId src_ext = pool.load<ObjectId>(holder, entry.link_offset());
  auto objects = pool.live_objects();
  {
    Transaction tx(pool);
    rt.relocate(tx, RecordRef{holder, stride}, RecordRef{holder, 0}, entry);
    tx.commit();
  }
  ObjectId dst_ext = pool.load<ObjectId>(holder, stride + entry.link_offset());
  EXPECT_NE(dst_ext, src_ext);
  EXPECT_FALSE(pool.is_allocated(src_ext));
  EXPECT_EQ(pool.live_objects(), objects);
  EXPECT_EQ(pool.load<std::uint32_t>(holder, stride), 3u);
  EXPECT_EQ(pool.load<std::uint64_t>(dst_ext), 3u);
}

TEST_F(EmbeddedFixture, ShallowPutTransfersLink) {
  ObjectId holder = make_holder(3, 4);
  rt.read<std::uint64_t>(RecordRef{holder, 0}, entry, "key64");
  ObjectId src_ext = pool.load<ObjectId>(holder, entry.link_offset());
  auto objects = pool.live_objects();
  auto before = pool.stats();
  {
    rt.set_copy_mode(CopyMode::shallow);
    Transaction tx(pool);
    RecordImage img = rt.take(RecordRef{holder, 0}, entry);
    rt.put(tx, RecordRef{holder, stride}, entry, img);
    tx.commit();
  }
  EXPECT_EQ(pool.load<ObjectId>(holder, stride + entry.link_offset()), src_ext);
  EXPECT_EQ(pool.live_objects(), objects);
  EXPECT_EQ((pool.stats() - before).deep_copies, 0u);
}

TEST(Persistence, ExtensionsSurviveReopen) {
  ScratchDir dir;
  auto d = linked_list_v2();
  ObjectId node;
  {
    Pool pool = Pool::create(dir.file("p"), "LL", kMiB);
    ExtensionRuntime rt(pool);
    node = pool.get_root(d.base_size());
    pool.store_value(node, 0, std::int32_t{12});
    EXPECT_EQ(rt.read<double>(node, d, "val_dbl"), 12.0);
  }
  Pool pool = Pool::open(dir.file("p"), "LL");
  ExtensionRuntime rt(pool);
  auto before = pool.stats();
  EXPECT_EQ(rt.read<double>(node, d, "val_dbl"), 12.0);
  EXPECT_EQ((pool.stats() - before).allocations, 0u);
}

TEST(Persistence, CrashDuringMaterializationIsAtomic) {
  ScratchDir dir;
  auto d = two_levels();
  for (std::uint64_t k = 1; k < 40; ++k) {
    auto path = dir.file("p" + std::to_string(k));
    ObjectId node;
    bool crashed = false;
    std::uint64_t live_before = 0;
    {
      Pool pool = Pool::create(path, "LL", kMiB);
      ExtensionRuntime rt(pool);
      node = pool.get_root(d.base_size());
      pool.store_value(node, 0, std::int32_t{12});
      live_before = pool.live_bytes();
      pool.arm_crash({k, true});
      try {
        Transaction tx(pool);
        rt.ensure_extension(tx, node, d, 2);
        tx.commit();
      } catch (const SimulatedCrash&) {
        crashed = true;
      }
    }
    Pool pool = Pool::recover(path);
    ExtensionRuntime rt(pool);
    unsigned depth = rt.extension_depth(node, d);
    if (depth == 0) {
      EXPECT_TRUE(crashed);
      EXPECT_EQ(pool.live_bytes(), live_before) << k;
    } else {
      EXPECT_EQ(depth, 2u) << k;
      EXPECT_EQ(rt.read<std::uint64_t>(node, d, "wide"), 12u);
    }
  }
}

TEST(Properties, InitIsPureFunctionOfLowerLevels) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "LL", kMiB);
  ExtensionRuntime rt(pool);
  auto d = two_levels();
  std::mt19937 rng(3);
  for (int i = 0; i < 50; ++i) {
    auto v = static_cast<std::int32_t>(rng());
    ObjectId a = pool.alloc(d.base_size(), true);
    ObjectId b = pool.alloc(d.base_size(), true);
    pool.store_value(a, 0, v);
    pool.store_value(b, 0, v);
    pool.store_value(b, 4, ObjectId{pool.uuid(), 4096});  // unrelated base field
    EXPECT_EQ(rt.read<std::uint64_t>(a, d, "wide"), rt.read<std::uint64_t>(b, d, "wide"));
    EXPECT_EQ(rt.read<std::uint64_t>(a, d, "wide"), static_cast<std::uint32_t>(v));
  }
}

TEST(Properties, LazinessAndChainIntegrity) {
  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "LL", 4 * kMiB);
  ExtensionRuntime rt(pool);
  auto d = two_levels();
  std::vector<ObjectId> nodes;
  for (int i = 0; i < 200; ++i) nodes.push_back(pool.alloc(d.base_size(), true));

  std::mt19937 rng(11);
  std::vector<unsigned> expected(nodes.size(), 0);
  std::uint64_t pairs = 0;
  auto before = pool.stats();
  for (int i = 0; i < 1000; ++i) {
    std::size_t n = rng() % nodes.size();
    unsigned level = rng() % 3;
    const char* field = level == 0 ? "val" : level == 1 ? "wide" : "tag";
    rt.read<std::uint32_t>(nodes[n], d, field);
    if (level > expected[n]) {
      pairs += level - expected[n];
      expected[n] = level;
    }
  }
  EXPECT_EQ((pool.stats() - before).allocations, pairs);
  for (std::size_t n = 0; n < nodes.size(); ++n) EXPECT_EQ(rt.extension_depth(nodes[n], d), expected[n]);
}

TEST(Manifest, RoundTrip) {
  SchemaManifest m;
  auto d = linked_list_v1();
  d = append_extension(d, packed({{"val_dbl", 8}}), make_init_rule({"int_to_f64", "val"}));
  m.add(d, {{"int_to_f64", "val"}});
  m.add(define_type("other", packed({{"a", 8}})));

  SchemaManifest back = SchemaManifest::parse(m.to_json());
  ASSERT_EQ(back.types().size(), 2u);
  EXPECT_EQ(back.fingerprint(), m.fingerprint());
  EXPECT_EQ(back.to_json(), m.to_json());
  const TypeDescriptor& ll = back.type("LL");
  EXPECT_EQ(ll.record_size(), 36u);
  EXPECT_EQ(ll.extension(1).record_size(), 24u);
  EXPECT_EQ(ll.fingerprint(), d.fingerprint());
  EXPECT_EQ(error_of([&] { back.type("missing"); }), ErrorCode::no_such_field);
}

TEST(Manifest, ParsesPackedFieldsAndRunsInitRules) {
  const char* text = R"({"types": [{"name": "node",
      "fields": [{"name": "key", "size": 4}, {"name": "value", "size": 16, "kind": "objectid"}],
      "extensions": [{"fields": [{"name": "key64", "size": 8}], "init": {"rule": "widen", "from": "key"}}]}]})";
  SchemaManifest m = SchemaManifest::parse(text);
  const TypeDescriptor& d = m.type("node");
  EXPECT_EQ(d.field("value").offset, 4u);
  EXPECT_EQ(d.link_offset(), 20u);

  ScratchDir dir;
  Pool pool = Pool::create(dir.file("p"), "node", kMiB);
  ExtensionRuntime rt(pool);
  ObjectId n = pool.alloc(d.base_size(), true);
  pool.store_value(n, 0, std::uint32_t{0xFFFFFFFF});
  EXPECT_EQ(rt.read<std::uint64_t>(n, d, "key64"), 0xFFFFFFFFull);
}

TEST(Manifest, Errors) {
  EXPECT_EQ(error_of([] { SchemaManifest::parse("{"); }), ErrorCode::config_error);
  EXPECT_EQ(error_of([] {
              SchemaManifest::parse(R"({"types": [{"name": "n", "fields": [{"name": "a", "size": 4}],
                "extensions": [{"fields": [{"name": "b", "size": 4}], "init": {"rule": "magic"}}]}]})");
            }),
            ErrorCode::config_error);
  EXPECT_EQ(error_of([] { SchemaManifest::load("/nonexistent/manifest.json"); }), ErrorCode::io_error);
}

TEST(Manifest, SaveAndLoad) {
  ScratchDir dir;
  SchemaManifest m;
  m.add(linked_list_v1());
  m.save(dir.file("m.json"));
  EXPECT_EQ(SchemaManifest::load(dir.file("m.json")).fingerprint(), m.fingerprint());
}

}  // namespace
