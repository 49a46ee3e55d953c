// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

// Crit-bit tree. Every entry holds either a leaf (key plus tagged value) or
// a child node; a node stores the bit it splits on and two entries. Leaves
// move between entries on insert and remove, which makes them copy sites.

#include <bit>
#include <unordered_map>

#include "kernel_base.hpp"

namespace leds::kernels {

namespace {

// Root: u64 count, entry.
constexpr std::uint64_t kCountOff = 0;
constexpr std::uint64_t kEntryOff = 8;
// Node: i32 diff, entry[2].
constexpr std::uint64_t kDiffOff = 0;
constexpr std::uint64_t kFirstEntry = 4;

std::uint64_t root_size(const RecordLayout& l) { return kEntryOff + l.size; }
std::uint64_t node_size(const RecordLayout& l) { return kFirstEntry + 2 * l.size; }
std::uint64_t entry_at(const RecordLayout& l, int side) { return kFirstEntry + side * l.size; }

int bit_of(std::uint64_t key, int bit) { return static_cast<int>((key >> bit) & 1); }

class CritBitTree final : public KernelBase {
 public:
  CritBitTree(Variant variant, ExtensionRuntime& rt) : KernelBase(KernelKind::ctree, variant, rt) {
    root_ = open_root(root_size(layout_), [](Transaction&, ObjectId) {});
  }

  bool insert(Transaction& tx, std::uint64_t key, std::uint64_t value) override {
    check_key(key);
    RecordRef top{root_, kEntryOff};
    if (empty(top)) {
      write_record(tx, top, record_image(key, value), key);
      bump(tx, 1);
      return true;
    }
    RecordRef p = top;
    while (internal(p)) p = side(child(p), bit_of(key, diff(child(p))));
    std::uint64_t other = key_of(p);
    if (other == key) return false;
    int d = 63 - std::countl_zero(key ^ other);

    p = top;
    while (internal(p) && diff(child(p)) > d) p = side(child(p), bit_of(key, diff(child(p))));

    ObjectId n = tx.alloc_zeroed(node_size(layout_));
    set(tx, n, kDiffOff, static_cast<std::int32_t>(d));
    int b = bit_of(key, d);
    put(tx, side(n, 1 - b), take(p));
    write_record(tx, side(n, b), record_image(key, value), key);
    tx.write(p.base, p.at, internal_image(n));
    bump(tx, 1);
    return true;
  }

  bool remove(Transaction& tx, std::uint64_t key) override {
    RecordRef p{root_, kEntryOff};
    if (empty(p)) return false;
    RecordRef parent;
    int from = 0;
    while (internal(p)) {
      parent = p;
      from = bit_of(key, diff(child(p)));
      p = side(child(p), from);
    }
    if (key_of(p) != key) return false;
    drop_record(tx, p);
    if (parent.base.is_null()) {
      tx.write(p.base, p.at, std::vector<std::byte>(layout_.size));
    } else {
      ObjectId n = child(parent);
      put(tx, parent, take(side(n, 1 - from)));
      tx.free(n);
    }
    bump(tx, -1);
    return true;
  }

  std::optional<std::uint64_t> lookup(std::uint64_t key) override {
    RecordRef p{root_, kEntryOff};
    if (empty(p)) return std::nullopt;
    while (internal(p)) p = side(child(p), bit_of(key, diff(child(p))));
    if (key_of(p) != key) return std::nullopt;
    return value_of(p);
  }

  void scan(const std::function<void(const MapEntry&)>& visit, bool with_names) override {
    for_each_leaf([&](RecordRef r) {
      MapEntry e{key_of(r), value_of(r), {}};
      if (with_names) e.name = name_of(r);
      visit(e);
    });
  }

  std::uint64_t size() override { return get<std::uint64_t>(root_, kCountOff); }

  void validate() override {
    std::uint64_t leaves = 0;
    bool first = true;
    std::uint64_t last = 0;
    RecordRef top{root_, kEntryOff};
    if (!empty(top)) check(top, 64, 0, 0, leaves, first, last);
    if (leaves != size()) corrupt("count does not match the leaves");
  }

  void materialize_all(Transaction& tx) override {
    for_each_leaf([&](RecordRef r) { upgrade(tx, r); });
  }

  std::uint64_t extended_records() override {
    std::uint64_t count = 0;
    for_each_leaf([&](RecordRef r) { count += upgraded(r); });
    return count;
  }

 private:
  ObjectId slot(RecordRef e) { return id_at(e.base, e.at + layout_.value_off); }
  bool empty(RecordRef e) { return slot(e).is_null(); }
  bool internal(RecordRef e) {
    ObjectId s = slot(e);
    return !s.is_null() && !is_value(s);
  }
  ObjectId child(RecordRef e) { return slot(e); }
  int diff(ObjectId n) { return get<std::int32_t>(n, kDiffOff); }
  RecordRef side(ObjectId n, int b) { return RecordRef{n, entry_at(layout_, b)}; }

  std::vector<std::byte> internal_image(ObjectId n) const {
    std::vector<std::byte> image(layout_.size);
    store_at(image.data() + layout_.value_off, n);
    return image;
  }

  void bump(Transaction& tx, int delta) { set(tx, root_, kCountOff, size() + delta); }

  template <typename F>
  void for_each_leaf(F&& f) {
    RecordRef top{root_, kEntryOff};
    if (empty(top)) return;
    std::vector<RecordRef> stack{top};
    while (!stack.empty()) {
      RecordRef e = stack.back();
      stack.pop_back();
      if (!internal(e)) {
        f(e);
        continue;
      }
      stack.push_back(side(child(e), 1));
      stack.push_back(side(child(e), 0));
    }
  }

  // `above` is the parent's split bit; leaves below must agree with `prefix`
  // on every bit above it.
  void check(RecordRef e, int above, std::uint64_t prefix, std::uint64_t mask, std::uint64_t& leaves,
             bool& first, std::uint64_t& last) {
    if (empty(e)) corrupt("empty entry inside a node");
    if (!internal(e)) {
      std::uint64_t k = key_of(e);
      if ((k & mask) != prefix) corrupt("leaf on the wrong side of a split");
      if (!first && k <= last) corrupt("leaves not in key order");
      first = false;
      last = k;
      ++leaves;
      return;
    }
    ObjectId n = child(e);
    int d = diff(n);
    if (d < 0 || d >= above) corrupt("split bits not decreasing");
    std::uint64_t bit = 1ull << d;
    check(side(n, 0), d, prefix, mask | bit, leaves, first, last);
    check(side(n, 1), d, prefix | bit, mask | bit, leaves, first, last);
  }

  ObjectId root_;
};

}  // namespace

std::unique_ptr<MapKernel> make_ctree(Variant variant, ExtensionRuntime& rt) {
  return std::make_unique<CritBitTree>(variant, rt);
}

MigrationPass ctree_migrator(LayoutChange change) {
  RecordLayout from = RecordLayout::of(KernelKind::ctree, Variant::original);
  RecordLayout to = RecordLayout::of(KernelKind::ctree, manual_variant(change));
  MigrationPass pass;
  pass.from_version = kOriginalVersion;
  pass.to_version = kUpdatedVersion;
  pass.new_root_size = root_size(to);
  pass.transform = [from, to](MigrationContext& ctx, ObjectId old_root) {
    Pool& pool = ctx.pool();
    Transaction& tx = ctx.tx();
    ObjectId temp = ctx.alloc(root_size(to));
    if (!old_root) return temp;

    auto slot_of = [&](const std::byte* entry) { return load_at<ObjectId>(entry + from.value_off); };
    auto is_node = [](ObjectId s) { return !s.is_null() && s.pool_uuid != kValueTag; };

    std::vector<ObjectId> nodes;
    const std::byte* top = pool.translate(old_root) + kEntryOff;
    if (is_node(slot_of(top))) nodes.push_back(slot_of(top));
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (int b = 0; b < 2; ++b) {
        ObjectId s = slot_of(pool.translate(nodes[i]) + entry_at(from, b));
        if (is_node(s)) nodes.push_back(s);
      }
    std::unordered_map<ObjectId, ObjectId> moved;
    moved.reserve(nodes.size());
    for (ObjectId n : nodes) moved.emplace(n, ctx.alloc(node_size(to)));

    auto convert = [&](const std::byte* entry) {
      ObjectId s = slot_of(entry);
      if (!is_node(s)) return convert_record(KernelKind::ctree, entry, to);
      std::vector<std::byte> out(to.size);
      store_at(out.data() + to.value_off, moved.at(s));
      return out;
    };
    std::vector<std::byte> image(node_size(to));
    for (ObjectId n : nodes) {
      const std::byte* src = pool.translate(n);
      std::memcpy(image.data() + kDiffOff, src + kDiffOff, sizeof(std::int32_t));
      for (int b = 0; b < 2; ++b) {
        auto e = convert(src + entry_at(from, b));
        std::memcpy(image.data() + entry_at(to, b), e.data(), e.size());
      }
      ctx.write_node(moved.at(n), 0, image);
      ctx.free(n);
    }
    tx.set(temp, kCountOff, pool.load<std::uint64_t>(old_root, kCountOff));
    if (!slot_of(top).is_null()) tx.write(temp, kEntryOff, convert(top));
    return temp;
  };
  return pass;
}

}  // namespace leds::kernels
