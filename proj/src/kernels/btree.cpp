// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

// B-tree of minimum degree 4 (3 to 7 items per node). Shifts inside a node
// are raw byte copies; an item that changes node goes through take/put and
// is therefore a copy site for the extension chain.

#include <unordered_map>

#include "kernel_base.hpp"

namespace leds::kernels {

namespace {

constexpr int kMaxItems = 7;
constexpr int kMinItems = 3;
constexpr int kItemSlots = 8;

// Root: u64 count, ObjectId root node.
constexpr std::uint64_t kCountOff = 0;
constexpr std::uint64_t kTopOff = 8;
constexpr std::uint64_t kRootSize = 24;

// Node: i32 n, item[8], ObjectId slot[8].
constexpr std::uint64_t kCountField = 0;
constexpr std::uint64_t kItemsOff = 4;

std::uint64_t item_off(const RecordLayout& l, int i) { return kItemsOff + i * l.size; }
std::uint64_t slot_off(const RecordLayout& l, int i) {
  return kItemsOff + kItemSlots * l.size + i * kObjectIdSize;
}
std::uint64_t node_size(const RecordLayout& l) { return slot_off(l, kItemSlots); }

class BTree final : public KernelBase {
 public:
  BTree(Variant variant, ExtensionRuntime& rt) : KernelBase(KernelKind::btree, variant, rt) {
    root_ = open_root(kRootSize, [](Transaction&, ObjectId) {});
  }

  bool insert(Transaction& tx, std::uint64_t key, std::uint64_t value) override {
    check_key(key);
    if (find(key)) return false;
    ObjectId r = top();
    if (!r) {
      r = tx.alloc_zeroed(node_size(layout_));
      write_record(tx, item(r, 0), record_image(key, value), key);
      set_n(tx, r, 1);
      set(tx, root_, kTopOff, r);
    } else {
      if (n(r) == kMaxItems) {
        ObjectId s = tx.alloc_zeroed(node_size(layout_));
        set(tx, s, slot_off(layout_, 0), r);
        set(tx, root_, kTopOff, s);
        split_child(tx, s, 0);
        r = s;
      }
      insert_nonfull(tx, r, key, value);
    }
    set(tx, root_, kCountOff, size() + 1);
    return true;
  }

  bool remove(Transaction& tx, std::uint64_t key) override {
    if (!find(key)) return false;
    ObjectId r = top();
    erase(tx, r, key, nullptr);
    if (n(r) == 0) {
      set(tx, root_, kTopOff, child(r, 0));
      tx.free(r);
    }
    set(tx, root_, kCountOff, size() - 1);
    return true;
  }

  std::optional<std::uint64_t> lookup(std::uint64_t key) override {
    auto r = find(key);
    if (!r) return std::nullopt;
    return value_of(*r);
  }

  void scan(const std::function<void(const MapEntry&)>& visit, bool with_names) override {
    in_order(top(), [&](RecordRef r) {
      MapEntry e{key_of(r), value_of(r), {}};
      if (with_names) e.name = name_of(r);
      visit(e);
    });
  }

  std::uint64_t size() override { return get<std::uint64_t>(root_, kCountOff); }

  void validate() override {
    ObjectId r = top();
    if (!r) {
      if (size() != 0) corrupt("count does not match an empty tree");
      return;
    }
    std::uint64_t items = 0;
    int leaf_depth = -1;
    check(r, true, 0, false, 0, false, 0, leaf_depth, items);
    if (items != size()) corrupt("count does not match the items");
  }

  void materialize_all(Transaction& tx) override {
    in_order(top(), [&](RecordRef r) { upgrade(tx, r); });
  }

  std::uint64_t extended_records() override {
    std::uint64_t count = 0;
    in_order(top(), [&](RecordRef r) { count += upgraded(r); });
    return count;
  }

 private:
  ObjectId top() { return id_at(root_, kTopOff); }
  int n(ObjectId x) { return get<std::int32_t>(x, kCountField); }
  void set_n(Transaction& tx, ObjectId x, int v) { set(tx, x, kCountField, static_cast<std::int32_t>(v)); }
  RecordRef item(ObjectId x, int i) { return RecordRef{x, item_off(layout_, i)}; }
  ObjectId child(ObjectId x, int i) { return id_at(x, slot_off(layout_, i)); }
  void set_child(Transaction& tx, ObjectId x, int i, ObjectId c) { set(tx, x, slot_off(layout_, i), c); }
  bool leaf(ObjectId x) { return child(x, 0).is_null(); }
  std::uint64_t key_at(ObjectId x, int i) { return key_of(item(x, i)); }

  // Raw moves of `count` items (or child slots) inside one node.
  void shift_items(Transaction& tx, ObjectId x, int to, int from, int count) {
    if (count > 0)
      tx.copy_bytes(x, item_off(layout_, to), x, item_off(layout_, from), count * layout_.size);
  }
  void shift_slots(Transaction& tx, ObjectId x, int to, int from, int count) {
    if (count > 0)
      tx.copy_bytes(x, slot_off(layout_, to), x, slot_off(layout_, from), count * kObjectIdSize);
  }
  void move_item(Transaction& tx, ObjectId dst, int di, ObjectId src, int si) {
    move_record(tx, item(dst, di), item(src, si));
  }

  /// First position whose key is >= `key`.
  int position(ObjectId x, std::uint64_t key) {
    int i = 0;
    int count = n(x);
    while (i < count && key > key_at(x, i)) ++i;
    return i;
  }

  std::optional<RecordRef> find(std::uint64_t key) {
    for (ObjectId x = top(); x;) {
      int i = position(x, key);
      if (i < n(x) && key_at(x, i) == key) return item(x, i);
      if (leaf(x)) break;
      x = child(x, i);
    }
    return std::nullopt;
  }

  void split_child(Transaction& tx, ObjectId x, int i) {
    ObjectId y = child(x, i);
    ObjectId z = tx.alloc_zeroed(node_size(layout_));
    for (int j = 0; j < kMinItems; ++j) move_item(tx, z, j, y, j + kMinItems + 1);
    if (!leaf(y))
      tx.copy_bytes(z, slot_off(layout_, 0), y, slot_off(layout_, kMinItems + 1),
                    (kMinItems + 1) * kObjectIdSize);
    set_n(tx, z, kMinItems);
    int count = n(x);
    shift_slots(tx, x, i + 2, i + 1, count - i);
    set_child(tx, x, i + 1, z);
    shift_items(tx, x, i + 1, i, count - i);
    move_item(tx, x, i, y, kMinItems);
    set_n(tx, y, kMinItems);
    set_n(tx, x, count + 1);
  }

  void insert_nonfull(Transaction& tx, ObjectId x, std::uint64_t key, std::uint64_t value) {
    for (;;) {
      int i = position(x, key);
      if (leaf(x)) {
        shift_items(tx, x, i + 1, i, n(x) - i);
        write_record(tx, item(x, i), record_image(key, value), key);
        set_n(tx, x, n(x) + 1);
        return;
      }
      if (n(child(x, i)) == kMaxItems) {
        split_child(tx, x, i);
        if (key > key_at(x, i)) ++i;
      }
      x = child(x, i);
    }
  }

  /// Merges child i+1 and separator i into child i.
  void merge(Transaction& tx, ObjectId x, int i) {
    ObjectId y = child(x, i);
    ObjectId z = child(x, i + 1);
    int ny = n(y), nz = n(z);
    move_item(tx, y, ny, x, i);
    for (int j = 0; j < nz; ++j) move_item(tx, y, ny + 1 + j, z, j);
    if (!leaf(y))
      tx.copy_bytes(y, slot_off(layout_, ny + 1), z, slot_off(layout_, 0), (nz + 1) * kObjectIdSize);
    set_n(tx, y, ny + 1 + nz);
    int count = n(x);
    shift_items(tx, x, i, i + 1, count - i - 1);
    shift_slots(tx, x, i + 1, i + 2, count - i - 1);
    set_child(tx, x, count, ObjectId::null());
    set_n(tx, x, count - 1);
    tx.free(z);
  }

  void borrow_left(Transaction& tx, ObjectId x, int i) {
    ObjectId c = child(x, i);
    ObjectId l = child(x, i - 1);
    int nc = n(c), nl = n(l);
    shift_items(tx, c, 1, 0, nc);
    move_item(tx, c, 0, x, i - 1);
    if (!leaf(c)) {
      shift_slots(tx, c, 1, 0, nc + 1);
      set_child(tx, c, 0, child(l, nl));
      set_child(tx, l, nl, ObjectId::null());
    }
    move_item(tx, x, i - 1, l, nl - 1);
    set_n(tx, l, nl - 1);
    set_n(tx, c, nc + 1);
  }

  void borrow_right(Transaction& tx, ObjectId x, int i) {
    ObjectId c = child(x, i);
    ObjectId r = child(x, i + 1);
    int nc = n(c), nr = n(r);
    move_item(tx, c, nc, x, i);
    move_item(tx, x, i, r, 0);
    shift_items(tx, r, 0, 1, nr - 1);
    if (!leaf(c)) {
      set_child(tx, c, nc + 1, child(r, 0));
      shift_slots(tx, r, 0, 1, nr);
      set_child(tx, r, nr, ObjectId::null());
    }
    set_n(tx, r, nr - 1);
    set_n(tx, c, nc + 1);
  }

  /// Removes `key` from the subtree at x. With `detached` set the item's
  /// image is handed back instead of being dropped.
  void erase(Transaction& tx, ObjectId x, std::uint64_t key, RecordImage* detached) {
    for (;;) {
      int i = position(x, key);
      int count = n(x);
      bool found = i < count && key_at(x, i) == key;
      if (leaf(x)) {
        if (!found) corrupt("key vanished during removal");
        if (detached)
          *detached = take(item(x, i));
        else
          drop_record(tx, item(x, i));
        shift_items(tx, x, i, i + 1, count - i - 1);
        set_n(tx, x, count - 1);
        return;
      }
      if (found) {
        ObjectId y = child(x, i);
        ObjectId z = child(x, i + 1);
        if (n(y) > kMinItems || n(z) > kMinItems) {
          bool pred = n(y) > kMinItems;
          ObjectId s = pred ? y : z;
          while (!leaf(s)) s = pred ? child(s, n(s)) : child(s, 0);
          std::uint64_t replacement = key_at(s, pred ? n(s) - 1 : 0);
          RecordImage image;
          erase(tx, pred ? y : z, replacement, &image);
          if (detached)
            *detached = take(item(x, i));
          else
            drop_record(tx, item(x, i));
          put(tx, item(x, i), image);
          return;
        }
        merge(tx, x, i);
        x = y;
        continue;
      }
      ObjectId c = child(x, i);
      if (n(c) == kMinItems) {
        if (i > 0 && n(child(x, i - 1)) > kMinItems) {
          borrow_left(tx, x, i);
        } else if (i < count && n(child(x, i + 1)) > kMinItems) {
          borrow_right(tx, x, i);
        } else {
          if (i == count) --i;
          merge(tx, x, i);
          c = child(x, i);
        }
      }
      x = c;
    }
  }

  template <typename F>
  void in_order(ObjectId x, F&& f) {
    if (!x) return;
    int count = n(x);
    bool internal = !leaf(x);
    for (int i = 0; i < count; ++i) {
      if (internal) in_order(child(x, i), f);
      f(item(x, i));
    }
    if (internal) in_order(child(x, count), f);
  }

  void check(ObjectId x, bool is_root, std::uint64_t lo, bool has_lo, std::uint64_t hi, bool has_hi,
             int depth, int& leaf_depth, std::uint64_t& items) {
    int count = n(x);
    if (count > kMaxItems || count < (is_root ? 1 : kMinItems)) corrupt("item count out of range");
    std::uint64_t prev = 0;
    for (int i = 0; i < count; ++i) {
      std::uint64_t k = key_at(x, i);
      if ((i > 0 && k <= prev) || (has_lo && k <= lo) || (has_hi && k >= hi)) corrupt("keys out of order");
      if (!is_value(id_at(x, item_off(layout_, i) + layout_.value_off))) corrupt("value slot not tagged");
      prev = k;
    }
    items += count;
    if (leaf(x)) {
      for (int i = 1; i <= count; ++i)
        if (child(x, i)) corrupt("leaf with a child");
      if (leaf_depth < 0) leaf_depth = depth;
      if (leaf_depth != depth) corrupt("leaves at different depths");
      return;
    }
    for (int i = 0; i <= count; ++i) {
      ObjectId c = child(x, i);
      if (!c) corrupt("internal node missing a child");
      bool l = i > 0, h = i < count;
      check(c, false, l ? key_at(x, i - 1) : lo, l || has_lo, h ? key_at(x, i) : hi, h || has_hi,
            depth + 1, leaf_depth, items);
    }
  }

  ObjectId root_;
};

}  // namespace

std::unique_ptr<MapKernel> make_btree(Variant variant, ExtensionRuntime& rt) {
  return std::make_unique<BTree>(variant, rt);
}

MigrationPass btree_migrator(LayoutChange change) {
  RecordLayout from = RecordLayout::of(KernelKind::btree, Variant::original);
  RecordLayout to = RecordLayout::of(KernelKind::btree, manual_variant(change));
  MigrationPass pass;
  pass.from_version = kOriginalVersion;
  pass.to_version = kUpdatedVersion;
  pass.new_root_size = kRootSize;
  pass.transform = [from, to](MigrationContext& ctx, ObjectId old_root) {
    Pool& pool = ctx.pool();
    Transaction& tx = ctx.tx();
    ObjectId temp = ctx.alloc(kRootSize);
    if (!old_root) return temp;

    std::vector<ObjectId> nodes;
    if (ObjectId r = pool.load<ObjectId>(old_root, kTopOff)) nodes.push_back(r);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const std::byte* src = pool.translate(nodes[k]);
      int count = load_at<std::int32_t>(src + kCountField);
      for (int i = 0; i <= count; ++i)
        if (auto c = load_at<ObjectId>(src + slot_off(from, i))) nodes.push_back(c);
    }
    std::unordered_map<ObjectId, ObjectId> moved;
    moved.reserve(nodes.size());
    for (ObjectId x : nodes) moved.emplace(x, ctx.alloc(node_size(to)));

    std::vector<std::byte> image(node_size(to));
    for (ObjectId x : nodes) {
      std::fill(image.begin(), image.end(), std::byte{0});
      const std::byte* src = pool.translate(x);
      int count = load_at<std::int32_t>(src + kCountField);
      store_at(image.data() + kCountField, count);
      for (int i = 0; i < count; ++i) {
        auto rec = convert_record(KernelKind::btree, src + item_off(from, i), to);
        std::memcpy(image.data() + item_off(to, i), rec.data(), rec.size());
      }
      for (int i = 0; i <= count; ++i)
        if (auto c = load_at<ObjectId>(src + slot_off(from, i)))
          store_at(image.data() + slot_off(to, i), moved.at(c));
      ctx.write_node(moved.at(x), 0, image);
      ctx.free(x);
    }
    tx.set(temp, kCountOff, pool.load<std::uint64_t>(old_root, kCountOff));
    if (!nodes.empty()) tx.set(temp, kTopOff, moved.at(nodes.front()));
    return temp;
  };
  return pass;
}

}  // namespace leds::kernels
