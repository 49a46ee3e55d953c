// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "leds/error.hpp"
#include "leds/kernels.hpp"

namespace leds::kernels {

/// Inline values occupy an ObjectId-sized slot tagged with this identity.
/// Pool uuids are never 0 or 1, so a slot is empty, a value, or a child.
inline constexpr std::uint64_t kValueTag = 1;

inline ObjectId value_slot(std::uint64_t v) noexcept { return ObjectId{kValueTag, v}; }

inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Kernel-specific fields following key/value (and name) in a record.
std::vector<FieldSpec> kernel_fields(KernelKind kind);
std::string record_type_name(KernelKind kind);

/// Placement of the key-holding record for one variant.
struct RecordLayout {
  static constexpr std::uint64_t kNone = ~0ull;

  std::uint64_t key_width = 4;
  std::uint64_t value_off = 4;
  std::uint64_t name_off = kNone;
  std::uint64_t fields_off = 20;  // first kernel-specific field
  std::uint64_t link_off = kNone;
  std::uint64_t size = 0;

  static RecordLayout of(KernelKind kind, Variant variant);
};

template <typename T>
T load_at(const std::byte* p) noexcept {
  T v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

template <typename T>
void store_at(std::byte* p, const T& v) noexcept {
  std::memcpy(p, &v, sizeof v);
}

class KernelBase : public MapKernel {
 public:
  KernelKind kind() const noexcept override { return kind_; }

 protected:
  KernelBase(KernelKind kind, Variant variant, ExtensionRuntime& rt);

  bool automatic() const noexcept { return is_auto(variant()); }
  bool extendible() const noexcept { return layout_.link_off != RecordLayout::kNone; }

  std::byte* addr(ObjectId id) { return rt_.address(id); }
  ObjectId id_at(ObjectId obj, std::uint64_t off) { return load_at<ObjectId>(addr(obj) + off); }
  template <typename T>
  T get(ObjectId obj, std::uint64_t off) {
    return load_at<T>(addr(obj) + off);
  }
  template <typename T>
  void set(Transaction& tx, ObjectId obj, std::uint64_t off, const T& v) {
    tx.set(obj, off, v);
  }

  /// Creates or opens the root object; `init` runs once on a fresh root.
  ObjectId open_root(std::uint64_t size, const std::function<void(Transaction&, ObjectId)>& init);

  std::uint64_t key_of(RecordRef r);
  std::uint64_t value_of(RecordRef r);
  Name name_of(RecordRef r);
  bool is_value(ObjectId slot) const noexcept { return slot.pool_uuid == kValueTag; }

  /// A zeroed record image carrying `key` and `value`.
  std::vector<std::byte> record_image(std::uint64_t key, std::uint64_t value) const;
  /// Writes a fresh record; automatic-change records get their wide key.
  void write_record(Transaction& tx, RecordRef r, std::span<const std::byte> image, std::uint64_t key);

  RecordImage take(RecordRef src);
  /// Moves a record to another object (a copy site in the automatic model).
  void put(Transaction& tx, RecordRef dst, const RecordImage& image);
  void move_record(Transaction& tx, RecordRef dst, RecordRef src) { put(tx, dst, take(src)); }
  /// Releases the extensions of a record about to be discarded.
  void drop_record(Transaction& tx, RecordRef r);
  void upgrade(Transaction& tx, RecordRef r);
  bool upgraded(RecordRef r);

  void check_key(std::uint64_t key) const;
  [[noreturn]] void corrupt(const std::string& what) const;

  ExtensionRuntime& rt_;
  Pool& pool_;
  KernelKind kind_;
  TypeDescriptor desc_;
  RecordLayout layout_;
  FieldHandle key64_{};
};

std::unique_ptr<MapKernel> make_hashmap(Variant variant, ExtensionRuntime& rt);
std::unique_ptr<MapKernel> make_skiplist(Variant variant, ExtensionRuntime& rt);
std::unique_ptr<MapKernel> make_rbtree(Variant variant, ExtensionRuntime& rt);
std::unique_ptr<MapKernel> make_ctree(Variant variant, ExtensionRuntime& rt);
std::unique_ptr<MapKernel> make_btree(Variant variant, ExtensionRuntime& rt);

MigrationPass hashmap_migrator(LayoutChange change);
MigrationPass skiplist_migrator(LayoutChange change);
MigrationPass rbtree_migrator(LayoutChange change);
MigrationPass ctree_migrator(LayoutChange change);
MigrationPass btree_migrator(LayoutChange change);

/// Rewrites a V1 record image into the manual layout `to`, leaving the
/// kernel-specific fields for the caller.
std::vector<std::byte> convert_record(KernelKind kind, const std::byte* v1, const RecordLayout& to);

}  // namespace leds::kernels
