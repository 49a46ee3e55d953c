// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

// Red-black tree with a persistent black sentinel. Deletion splices nodes
// with transplant, so keys never move between nodes.

#include <unordered_map>

#include "kernel_base.hpp"

namespace leds::kernels {

namespace {

// Root: u64 count, ObjectId root, ObjectId sentinel.
constexpr std::uint64_t kCountOff = 0;
constexpr std::uint64_t kTopOff = 8;
constexpr std::uint64_t kNilOff = 24;
constexpr std::uint64_t kRootSize = 40;

constexpr std::uint32_t kBlack = 0;
constexpr std::uint32_t kRed = 1;

// Node fields relative to the first kernel field.
constexpr std::uint64_t kColor = 0;
constexpr std::uint64_t kParent = 4;
constexpr std::uint64_t kLeft = 20;
constexpr std::uint64_t kRight = 36;

class RbTree final : public KernelBase {
 public:
  RbTree(Variant variant, ExtensionRuntime& rt)
      : KernelBase(KernelKind::rbtree, variant, rt), f_(layout_.fields_off) {
    std::uint64_t size = layout_.size;
    root_ = open_root(kRootSize, [size](Transaction& tx, ObjectId root) {
      ObjectId nil = tx.alloc_zeroed(size);
      tx.set(root, kTopOff, nil);
      tx.set(root, kNilOff, nil);
    });
    nil_ = id_at(root_, kNilOff);
  }

  bool insert(Transaction& tx, std::uint64_t key, std::uint64_t value) override {
    check_key(key);
    ObjectId y = nil_;
    bool less = false;
    for (ObjectId x = top(); x != nil_; x = less ? left(x) : right(x)) {
      y = x;
      std::uint64_t k = key_of(x);
      if (k == key) return false;
      less = key < k;
    }
    ObjectId z = tx.alloc_zeroed(layout_.size);
    auto image = record_image(key, value);
    store_at(image.data() + f_ + kColor, kRed);
    store_at(image.data() + f_ + kParent, y);
    store_at(image.data() + f_ + kLeft, nil_);
    store_at(image.data() + f_ + kRight, nil_);
    write_record(tx, z, image, key);
    if (y == nil_)
      set_top(tx, z);
    else if (less)
      link(tx, y, kLeft, z);
    else
      link(tx, y, kRight, z);
    insert_fixup(tx, z);
    set(tx, root_, kCountOff, size() + 1);
    return true;
  }

  bool remove(Transaction& tx, std::uint64_t key) override {
    ObjectId z = search(key);
    if (z == nil_) return false;
    ObjectId y = z;
    std::uint32_t y_color = color(y);
    ObjectId x;
    if (left(z) == nil_) {
      x = right(z);
      transplant(tx, z, x);
    } else if (right(z) == nil_) {
      x = left(z);
      transplant(tx, z, x);
    } else {
      y = right(z);
      while (left(y) != nil_) y = left(y);
      y_color = color(y);
      x = right(y);
      if (parent(y) == z) {
        link(tx, x, kParent, y);
      } else {
        transplant(tx, y, x);
        link(tx, y, kRight, right(z));
        link(tx, right(y), kParent, y);
      }
      transplant(tx, z, y);
      link(tx, y, kLeft, left(z));
      link(tx, left(y), kParent, y);
      paint(tx, y, color(z));
    }
    if (y_color == kBlack) delete_fixup(tx, x);
    if (automatic())
      rt_.free_extendible(tx, z, desc_);
    else
      tx.free(z);
    set(tx, root_, kCountOff, size() - 1);
    return true;
  }

  std::optional<std::uint64_t> lookup(std::uint64_t key) override {
    ObjectId n = search(key);
    if (n == nil_) return std::nullopt;
    return value_of(n);
  }

  void scan(const std::function<void(const MapEntry&)>& visit, bool with_names) override {
    in_order([&](ObjectId n) {
      MapEntry e{key_of(n), value_of(n), {}};
      if (with_names) e.name = name_of(n);
      visit(e);
    });
  }

  std::uint64_t size() override { return get<std::uint64_t>(root_, kCountOff); }

  void validate() override {
    if (color(nil_) != kBlack) corrupt("sentinel is not black");
    if (color(top()) != kBlack) corrupt("root is not black");
    if (top() != nil_ && parent(top()) != nil_) corrupt("root has a parent");
    std::uint64_t nodes = 0;
    bool first = true;
    std::uint64_t last = 0;
    in_order([&](ObjectId n) {
      std::uint64_t k = key_of(n);
      if (!first && k <= last) corrupt("in-order keys not increasing");
      first = false;
      last = k;
      ++nodes;
    });
    if (nodes != size()) corrupt("count does not match the tree");
    black_height(top());
  }

  void materialize_all(Transaction& tx) override {
    in_order([&](ObjectId n) { upgrade(tx, n); });
  }

  std::uint64_t extended_records() override {
    std::uint64_t count = 0;
    in_order([&](ObjectId n) { count += upgraded(n); });
    return count;
  }

 private:
  ObjectId top() { return id_at(root_, kTopOff); }
  ObjectId left(ObjectId n) { return id_at(n, f_ + kLeft); }
  ObjectId right(ObjectId n) { return id_at(n, f_ + kRight); }
  ObjectId parent(ObjectId n) { return id_at(n, f_ + kParent); }
  std::uint32_t color(ObjectId n) { return get<std::uint32_t>(n, f_ + kColor); }

  void set_top(Transaction& tx, ObjectId n) { set(tx, root_, kTopOff, n); }
  void link(Transaction& tx, ObjectId n, std::uint64_t field, ObjectId to) {
    set(tx, n, f_ + field, to);
  }
  void paint(Transaction& tx, ObjectId n, std::uint32_t c) {
    if (color(n) != c) set(tx, n, f_ + kColor, c);
  }

  ObjectId search(std::uint64_t key) {
    ObjectId x = top();
    while (x != nil_) {
      std::uint64_t k = key_of(x);
      if (k == key) return x;
      x = key < k ? left(x) : right(x);
    }
    return x;
  }

  template <typename F>
  void in_order(F&& f) {
    std::vector<ObjectId> stack;
    ObjectId x = top();
    while (x != nil_ || !stack.empty()) {
      while (x != nil_) {
        stack.push_back(x);
        x = left(x);
      }
      x = stack.back();
      stack.pop_back();
      f(x);
      x = right(x);
    }
  }

  int black_height(ObjectId n) {
    if (n == nil_) return 1;
    ObjectId l = left(n), r = right(n);
    if (l != nil_ && parent(l) != n) corrupt("left child's parent link is wrong");
    if (r != nil_ && parent(r) != n) corrupt("right child's parent link is wrong");
    if (color(n) == kRed && (color(l) == kRed || color(r) == kRed)) corrupt("red node with red child");
    int hl = black_height(l), hr = black_height(r);
    if (hl != hr) corrupt("unequal black heights");
    return hl + (color(n) == kBlack ? 1 : 0);
  }

  void rotate(Transaction& tx, ObjectId x, std::uint64_t dir, std::uint64_t other) {
    ObjectId y = id_at(x, f_ + other);
    ObjectId inner = id_at(y, f_ + dir);
    link(tx, x, other, inner);
    if (inner != nil_) link(tx, inner, kParent, x);
    ObjectId p = parent(x);
    link(tx, y, kParent, p);
    if (p == nil_)
      set_top(tx, y);
    else if (x == left(p))
      link(tx, p, kLeft, y);
    else
      link(tx, p, kRight, y);
    link(tx, y, dir, x);
    link(tx, x, kParent, y);
  }
  void rotate_left(Transaction& tx, ObjectId x) { rotate(tx, x, kLeft, kRight); }
  void rotate_right(Transaction& tx, ObjectId x) { rotate(tx, x, kRight, kLeft); }

  void insert_fixup(Transaction& tx, ObjectId z) {
    while (color(parent(z)) == kRed) {
      ObjectId p = parent(z);
      ObjectId g = parent(p);
      bool on_left = p == left(g);
      ObjectId uncle = on_left ? right(g) : left(g);
      if (color(uncle) == kRed) {
        paint(tx, p, kBlack);
        paint(tx, uncle, kBlack);
        paint(tx, g, kRed);
        z = g;
        continue;
      }
      if (on_left && z == right(p)) {
        z = p;
        rotate_left(tx, z);
      } else if (!on_left && z == left(p)) {
        z = p;
        rotate_right(tx, z);
      }
      p = parent(z);
      g = parent(p);
      paint(tx, p, kBlack);
      paint(tx, g, kRed);
      if (on_left)
        rotate_right(tx, g);
      else
        rotate_left(tx, g);
    }
    paint(tx, top(), kBlack);
  }

  void transplant(Transaction& tx, ObjectId u, ObjectId v) {
    ObjectId p = parent(u);
    if (p == nil_)
      set_top(tx, v);
    else if (u == left(p))
      link(tx, p, kLeft, v);
    else
      link(tx, p, kRight, v);
    link(tx, v, kParent, p);
  }

  void delete_fixup(Transaction& tx, ObjectId x) {
    while (x != top() && color(x) == kBlack) {
      ObjectId p = parent(x);
      bool on_left = x == left(p);
      std::uint64_t near = on_left ? kLeft : kRight;
      std::uint64_t far = on_left ? kRight : kLeft;
      ObjectId w = id_at(p, f_ + far);
      if (color(w) == kRed) {
        paint(tx, w, kBlack);
        paint(tx, p, kRed);
        rotate(tx, p, near, far);
        w = id_at(p, f_ + far);
      }
      if (color(id_at(w, f_ + near)) == kBlack && color(id_at(w, f_ + far)) == kBlack) {
        paint(tx, w, kRed);
        x = p;
        continue;
      }
      if (color(id_at(w, f_ + far)) == kBlack) {
        paint(tx, id_at(w, f_ + near), kBlack);
        paint(tx, w, kRed);
        rotate(tx, w, far, near);
        w = id_at(p, f_ + far);
      }
      paint(tx, w, color(p));
      paint(tx, p, kBlack);
      paint(tx, id_at(w, f_ + far), kBlack);
      rotate(tx, p, near, far);
      x = top();
    }
    paint(tx, x, kBlack);
  }

  ObjectId root_;
  ObjectId nil_;
  std::uint64_t f_;
};

}  // namespace

std::unique_ptr<MapKernel> make_rbtree(Variant variant, ExtensionRuntime& rt) {
  return std::make_unique<RbTree>(variant, rt);
}

MigrationPass rbtree_migrator(LayoutChange change) {
  MigrationPass pass;
  pass.from_version = kOriginalVersion;
  pass.to_version = kUpdatedVersion;
  pass.new_root_size = kRootSize;
  pass.transform = [change](MigrationContext& ctx, ObjectId old_root) {
    Pool& pool = ctx.pool();
    Transaction& tx = ctx.tx();
    RecordLayout from = RecordLayout::of(KernelKind::rbtree, Variant::original);
    RecordLayout to = RecordLayout::of(KernelKind::rbtree, manual_variant(change));
    ObjectId temp = ctx.alloc(kRootSize);
    if (!old_root) {
      ObjectId nil = ctx.alloc(to.size);
      tx.set(temp, kTopOff, nil);
      tx.set(temp, kNilOff, nil);
      return temp;
    }
    ObjectId old_nil = pool.load<ObjectId>(old_root, kNilOff);
    std::vector<ObjectId> nodes;
    std::vector<ObjectId> stack{pool.load<ObjectId>(old_root, kTopOff)};
    while (!stack.empty()) {
      ObjectId n = stack.back();
      stack.pop_back();
      if (n == old_nil) continue;
      nodes.push_back(n);
      stack.push_back(pool.load<ObjectId>(n, from.fields_off + kLeft));
      stack.push_back(pool.load<ObjectId>(n, from.fields_off + kRight));
    }
    std::unordered_map<ObjectId, ObjectId> moved;
    moved.reserve(nodes.size() + 1);
    ObjectId nil = ctx.alloc(to.size);
    moved.emplace(old_nil, nil);
    for (ObjectId n : nodes) moved.emplace(n, ctx.alloc(to.size));
    auto map = [&](ObjectId old) {
      auto it = moved.find(old);
      return it == moved.end() ? ObjectId::null() : it->second;
    };
    auto convert = [&](ObjectId n) {
      const std::byte* src = pool.translate(n);
      auto rec = convert_record(KernelKind::rbtree, src, to);
      for (std::uint64_t field : {kParent, kLeft, kRight})
        store_at(rec.data() + to.fields_off + field,
                 map(load_at<ObjectId>(src + from.fields_off + field)));
      return rec;
    };
    for (ObjectId n : nodes) {
      ctx.write_node(moved.at(n), 0, convert(n));
      ctx.free(n);
    }
    tx.write(nil, 0, convert(old_nil));
    ctx.free(old_nil);
    tx.set(temp, kCountOff, pool.load<std::uint64_t>(old_root, kCountOff));
    tx.set(temp, kTopOff, map(pool.load<ObjectId>(old_root, kTopOff)));
    tx.set(temp, kNilOff, nil);
    return temp;
  };
  return pass;
}

}  // namespace leds::kernels
