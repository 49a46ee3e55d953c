// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

// Chained hash map. Buckets start at 10 and double once the map holds more
// than two entries per bucket. New nodes are appended at the chain tail and
// rehashing keeps each chain's order, so a chain always lists its nodes
// oldest first.

#include <unordered_set>

#include "kernel_base.hpp"

namespace leds::kernels {

namespace {

// Root: u64 seed, u64 count, ObjectId buckets, u64 bucket count.
constexpr std::uint64_t kSeedOff = 0;
constexpr std::uint64_t kCountOff = 8;
constexpr std::uint64_t kBucketsOff = 16;
constexpr std::uint64_t kNumBucketsOff = 32;
constexpr std::uint64_t kRootSize = 48;

constexpr std::uint64_t kInitialBuckets = 10;
constexpr std::uint64_t kSeed = 0x2545F4914F6CDD1Dull;

std::uint64_t bucket_of(std::uint64_t key, std::uint64_t seed, std::uint64_t buckets) {
  return mix64(key ^ seed) % buckets;
}

class HashMap final : public KernelBase {
 public:
  HashMap(Variant variant, ExtensionRuntime& rt)
      : KernelBase(KernelKind::hashmap, variant, rt), next_off_(layout_.fields_off) {
    root_ = open_root(kRootSize, [](Transaction& tx, ObjectId root) {
      tx.set(root, kSeedOff, kSeed);
      tx.set(root, kBucketsOff, tx.alloc_zeroed(kInitialBuckets * kObjectIdSize));
      tx.set(root, kNumBucketsOff, kInitialBuckets);
    });
  }

  bool insert(Transaction& tx, std::uint64_t key, std::uint64_t value) override {
    check_key(key);
    ObjectId buckets = id_at(root_, kBucketsOff);
    std::uint64_t nb = get<std::uint64_t>(root_, kNumBucketsOff);
    std::uint64_t b = bucket_of(key, get<std::uint64_t>(root_, kSeedOff), nb);
    ObjectId prev;
    for (ObjectId n = id_at(buckets, b * kObjectIdSize); n; n = id_at(n, next_off_)) {
      if (key_of(n) == key) return false;
      prev = n;
    }
    ObjectId node = tx.alloc_zeroed(layout_.size);
    write_record(tx, node, record_image(key, value), key);
    if (prev)
      set(tx, prev, next_off_, node);
    else
      set(tx, buckets, b * kObjectIdSize, node);
    std::uint64_t count = get<std::uint64_t>(root_, kCountOff) + 1;
    set(tx, root_, kCountOff, count);
    if (count > 2 * nb) rehash(tx);
    return true;
  }

  bool remove(Transaction& tx, std::uint64_t key) override {
    ObjectId buckets = id_at(root_, kBucketsOff);
    std::uint64_t b = bucket_of(key, get<std::uint64_t>(root_, kSeedOff),
                                get<std::uint64_t>(root_, kNumBucketsOff));
    ObjectId prev;
    for (ObjectId n = id_at(buckets, b * kObjectIdSize); n; prev = n, n = id_at(n, next_off_)) {
      if (key_of(n) != key) continue;
      ObjectId next = id_at(n, next_off_);
      if (prev)
        set(tx, prev, next_off_, next);
      else
        set(tx, buckets, b * kObjectIdSize, next);
      if (automatic())
        rt_.free_extendible(tx, n, desc_);
      else
        tx.free(n);
      set(tx, root_, kCountOff, get<std::uint64_t>(root_, kCountOff) - 1);
      return true;
    }
    return false;
  }

  std::optional<std::uint64_t> lookup(std::uint64_t key) override {
    ObjectId buckets = id_at(root_, kBucketsOff);
    std::uint64_t b = bucket_of(key, get<std::uint64_t>(root_, kSeedOff),
                                get<std::uint64_t>(root_, kNumBucketsOff));
    for (ObjectId n = id_at(buckets, b * kObjectIdSize); n; n = id_at(n, next_off_))
      if (key_of(n) == key) return value_of(n);
    return std::nullopt;
  }

  void scan(const std::function<void(const MapEntry&)>& visit, bool with_names) override {
    for_each_node([&](ObjectId n, std::uint64_t) {
      MapEntry e{key_of(n), value_of(n), {}};
      if (with_names) e.name = name_of(n);
      visit(e);
    });
  }

  std::uint64_t size() override { return get<std::uint64_t>(root_, kCountOff); }

  void validate() override {
    std::uint64_t nb = get<std::uint64_t>(root_, kNumBucketsOff);
    std::uint64_t seed = get<std::uint64_t>(root_, kSeedOff);
    if (nb < kInitialBuckets) corrupt("bucket count below the initial size");
    std::unordered_set<std::uint64_t> keys;
    std::uint64_t nodes = 0;
    for_each_node([&](ObjectId n, std::uint64_t b) {
      std::uint64_t k = key_of(n);
      if (bucket_of(k, seed, nb) != b) corrupt("node in the wrong bucket");
      if (!keys.insert(k).second) corrupt("duplicate key");
      if (!is_value(id_at(n, layout_.value_off))) corrupt("value slot not tagged");
      ++nodes;
    });
    if (nodes != size()) corrupt("count does not match the chains");
    if (nodes > 2 * nb) corrupt("load factor above the doubling threshold");
  }

  void materialize_all(Transaction& tx) override {
    for_each_node([&](ObjectId n, std::uint64_t) { upgrade(tx, n); });
  }

  std::uint64_t extended_records() override {
    std::uint64_t n = 0;
    for_each_node([&](ObjectId id, std::uint64_t) { n += upgraded(id) ? 1 : 0; });
    return n;
  }

 private:
  template <typename F>
  void for_each_node(F&& f) {
    ObjectId buckets = id_at(root_, kBucketsOff);
    std::uint64_t nb = get<std::uint64_t>(root_, kNumBucketsOff);
    for (std::uint64_t b = 0; b < nb; ++b)
      for (ObjectId n = id_at(buckets, b * kObjectIdSize); n; n = id_at(n, next_off_)) f(n, b);
  }

  void rehash(Transaction& tx) {
    ObjectId old = id_at(root_, kBucketsOff);
    std::uint64_t nb = get<std::uint64_t>(root_, kNumBucketsOff);
    std::uint64_t seed = get<std::uint64_t>(root_, kSeedOff);
    std::uint64_t wide = nb * 2;
    ObjectId fresh = tx.alloc_zeroed(wide * kObjectIdSize);
    std::vector<ObjectId> tails(wide);
    for (std::uint64_t b = 0; b < nb; ++b) {
      for (ObjectId n = id_at(old, b * kObjectIdSize); n;) {
        ObjectId next = id_at(n, next_off_);
        std::uint64_t to = bucket_of(key_of(n), seed, wide);
        if (tails[to])
          set(tx, tails[to], next_off_, n);
        else
          set(tx, fresh, to * kObjectIdSize, n);
        tails[to] = n;
        n = next;
      }
    }
    for (ObjectId t : tails)
      if (t && id_at(t, next_off_)) set(tx, t, next_off_, ObjectId::null());
    tx.free(old);
    set(tx, root_, kBucketsOff, fresh);
    set(tx, root_, kNumBucketsOff, wide);
  }

  ObjectId root_;
  std::uint64_t next_off_;
};

}  // namespace

std::unique_ptr<MapKernel> make_hashmap(Variant variant, ExtensionRuntime& rt) {
  return std::make_unique<HashMap>(variant, rt);
}

MigrationPass hashmap_migrator(LayoutChange change) {
  MigrationPass pass;
  pass.from_version = kOriginalVersion;
  pass.to_version = kUpdatedVersion;
  pass.new_root_size = kRootSize;
  pass.transform = [change](MigrationContext& ctx, ObjectId old_root) {
    Pool& pool = ctx.pool();
    Transaction& tx = ctx.tx();
    RecordLayout from = RecordLayout::of(KernelKind::hashmap, Variant::original);
    RecordLayout to = RecordLayout::of(KernelKind::hashmap, manual_variant(change));
    ObjectId temp = ctx.alloc(kRootSize);
    if (!old_root) {
      tx.set(temp, kSeedOff, kSeed);
      tx.set(temp, kBucketsOff, ctx.alloc(kInitialBuckets * kObjectIdSize));
      tx.set(temp, kNumBucketsOff, kInitialBuckets);
      return temp;
    }
    std::uint64_t nb = pool.load<std::uint64_t>(old_root, kNumBucketsOff);
    ObjectId old_buckets = pool.load<ObjectId>(old_root, kBucketsOff);
    ObjectId buckets = ctx.alloc(nb * kObjectIdSize);
    std::vector<ObjectId> chain, fresh;
    for (std::uint64_t b = 0; b < nb; ++b) {
      chain.clear();
      fresh.clear();
      for (ObjectId n = pool.load<ObjectId>(old_buckets, b * kObjectIdSize); n;
           n = pool.load<ObjectId>(n, from.fields_off))
        chain.push_back(n);
      for (std::size_t i = 0; i < chain.size(); ++i) fresh.push_back(ctx.alloc(to.size));
      for (std::size_t i = 0; i < chain.size(); ++i) {
        auto rec = convert_record(KernelKind::hashmap, pool.translate(chain[i]), to);
        store_at(rec.data() + to.fields_off, i + 1 < fresh.size() ? fresh[i + 1] : ObjectId::null());
        ctx.write_node(fresh[i], 0, rec);
        ctx.free(chain[i]);
      }
      if (!fresh.empty()) tx.set(buckets, b * kObjectIdSize, fresh.front());
    }
    ctx.free(old_buckets);
    tx.set(temp, kSeedOff, pool.load<std::uint64_t>(old_root, kSeedOff));
    tx.set(temp, kCountOff, pool.load<std::uint64_t>(old_root, kCountOff));
    tx.set(temp, kBucketsOff, buckets);
    tx.set(temp, kNumBucketsOff, nb);
    return temp;
  };
  return pass;
}

}  // namespace leds::kernels
