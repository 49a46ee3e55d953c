// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

// Four-level skip list. A node's height comes from coin flips drawn from a
// hash of its key, so the same key set always yields the same shape.

#include <unordered_map>

#include "kernel_base.hpp"

namespace leds::kernels {

namespace {

constexpr int kLevels = 4;

// Root: u64 count, ObjectId head[4].
constexpr std::uint64_t kCountOff = 0;
constexpr std::uint64_t kHeadOff = 8;
constexpr std::uint64_t kRootSize = kHeadOff + kLevels * kObjectIdSize;

int level_of(std::uint64_t key) {
  std::uint64_t h = mix64(key ^ 0x5851F42D4C957F2Dull);
  int level = 1;
  while (level < kLevels && (h & 1)) {
    ++level;
    h >>= 1;
  }
  return level;
}

struct Pos {
  ObjectId obj;
  std::uint64_t off;  // offset of next[0]
};

class SkipList final : public KernelBase {
 public:
  SkipList(Variant variant, ExtensionRuntime& rt)
      : KernelBase(KernelKind::skiplist, variant, rt), next_off_(layout_.fields_off) {
    root_ = open_root(kRootSize, [](Transaction&, ObjectId) {});
  }

  bool insert(Transaction& tx, std::uint64_t key, std::uint64_t value) override {
    check_key(key);
    Pos preds[kLevels];
    if (find(key, preds)) return false;
    int height = level_of(key);
    ObjectId node = tx.alloc_zeroed(layout_.size);
    auto image = record_image(key, value);
    for (int l = 0; l < height; ++l)
      store_at(image.data() + next_off_ + l * kObjectIdSize, next(preds[l], l));
    write_record(tx, node, image, key);
    for (int l = 0; l < height; ++l) set(tx, preds[l].obj, preds[l].off + l * kObjectIdSize, node);
    set(tx, root_, kCountOff, size() + 1);
    return true;
  }

  bool remove(Transaction& tx, std::uint64_t key) override {
    Pos preds[kLevels];
    ObjectId node = find(key, preds);
    if (!node) return false;
    for (int l = 0; l < kLevels; ++l) {
      if (next(preds[l], l) != node) continue;
      set(tx, preds[l].obj, preds[l].off + l * kObjectIdSize, next(Pos{node, next_off_}, l));
    }
    if (automatic())
      rt_.free_extendible(tx, node, desc_);
    else
      tx.free(node);
    set(tx, root_, kCountOff, size() - 1);
    return true;
  }

  std::optional<std::uint64_t> lookup(std::uint64_t key) override {
    Pos preds[kLevels];
    ObjectId node = find(key, preds);
    if (!node) return std::nullopt;
    return value_of(node);
  }

  void scan(const std::function<void(const MapEntry&)>& visit, bool with_names) override {
    for (ObjectId n = next(head(), 0); n; n = next(Pos{n, next_off_}, 0)) {
      MapEntry e{key_of(n), value_of(n), {}};
      if (with_names) e.name = name_of(n);
      visit(e);
    }
  }

  std::uint64_t size() override { return get<std::uint64_t>(root_, kCountOff); }

  void validate() override {
    std::uint64_t expected[kLevels] = {};
    for (ObjectId n = next(head(), 0); n; n = next(Pos{n, next_off_}, 0))
      for (int l = 0; l < level_of(key_of(n)); ++l) ++expected[l];
    if (expected[0] != size()) corrupt("count does not match level 0");
    for (int l = 0; l < kLevels; ++l) {
      std::uint64_t length = 0, last = 0;
      for (ObjectId n = next(head(), l); n; n = next(Pos{n, next_off_}, l)) {
        std::uint64_t k = key_of(n);
        if (length > 0 && k <= last) corrupt("level " + std::to_string(l) + " out of order");
        if (level_of(k) <= l) corrupt("node linked above its height");
        last = k;
        ++length;
      }
      if (length != expected[l]) corrupt("level " + std::to_string(l) + " misses nodes");
    }
  }

  void materialize_all(Transaction& tx) override {
    for (ObjectId n = next(head(), 0); n; n = next(Pos{n, next_off_}, 0)) upgrade(tx, n);
  }

  std::uint64_t extended_records() override {
    std::uint64_t count = 0;
    for (ObjectId n = next(head(), 0); n; n = next(Pos{n, next_off_}, 0)) count += upgraded(n);
    return count;
  }

 private:
  Pos head() const { return Pos{root_, kHeadOff}; }
  ObjectId next(Pos p, int level) { return id_at(p.obj, p.off + level * kObjectIdSize); }

  /// Fills the rightmost node before `key` on every level; returns the node
  /// holding `key`, or null.
  ObjectId find(std::uint64_t key, Pos (&preds)[kLevels]) {
    Pos x = head();
    ObjectId candidate;
    std::uint64_t candidate_key = 0;
    for (int l = kLevels - 1; l >= 0; --l) {
      candidate = ObjectId::null();
      for (ObjectId n = next(x, l); n; n = next(x, l)) {
        std::uint64_t k = key_of(n);
        if (k >= key) {
          candidate = n;
          candidate_key = k;
          break;
        }
        x = Pos{n, next_off_};
      }
      preds[l] = x;
    }
    return candidate && candidate_key == key ? candidate : ObjectId::null();
  }

  ObjectId root_;
  std::uint64_t next_off_;
};

}  // namespace

std::unique_ptr<MapKernel> make_skiplist(Variant variant, ExtensionRuntime& rt) {
  return std::make_unique<SkipList>(variant, rt);
}

MigrationPass skiplist_migrator(LayoutChange change) {
  MigrationPass pass;
  pass.from_version = kOriginalVersion;
  pass.to_version = kUpdatedVersion;
  pass.new_root_size = kRootSize;
  pass.transform = [change](MigrationContext& ctx, ObjectId old_root) {
    Pool& pool = ctx.pool();
    Transaction& tx = ctx.tx();
    RecordLayout from = RecordLayout::of(KernelKind::skiplist, Variant::original);
    RecordLayout to = RecordLayout::of(KernelKind::skiplist, manual_variant(change));
    ObjectId temp = ctx.alloc(kRootSize);
    if (!old_root) return temp;

    std::vector<ObjectId> nodes;
    for (ObjectId n = pool.load<ObjectId>(old_root, kHeadOff); n;
         n = pool.load<ObjectId>(n, from.fields_off))
      nodes.push_back(n);
    std::unordered_map<ObjectId, ObjectId> moved;
    moved.reserve(nodes.size());
    for (ObjectId n : nodes) moved.emplace(n, ctx.alloc(to.size));
    auto map = [&](ObjectId old) { return old ? moved.at(old) : old; };

    for (ObjectId n : nodes) {
      const std::byte* src = pool.translate(n);
      auto rec = convert_record(KernelKind::skiplist, src, to);
      for (int l = 0; l < kLevels; ++l)
        store_at(rec.data() + to.fields_off + l * kObjectIdSize,
                 map(load_at<ObjectId>(src + from.fields_off + l * kObjectIdSize)));
      ctx.write_node(moved.at(n), 0, rec);
      ctx.free(n);
    }
    tx.set(temp, kCountOff, pool.load<std::uint64_t>(old_root, kCountOff));
    for (int l = 0; l < kLevels; ++l)
      tx.set(temp, kHeadOff + l * kObjectIdSize,
             map(pool.load<ObjectId>(old_root, kHeadOff + l * kObjectIdSize)));
    return temp;
  };
  return pass;
}

}  // namespace leds::kernels
