// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "leds/extendible.hpp"
#include "leds/object_id.hpp"
#include "leds/pool.hpp"
#include "leds/transaction.hpp"

namespace leds {

/// An extendible record, standalone (`at` = 0) or embedded at byte `at`
/// inside another object.
struct RecordRef {
  ObjectId base;
  std::uint64_t at = 0;

  RecordRef() = default;
  RecordRef(ObjectId id, std::uint64_t offset = 0) : base(id), at(offset) {}  // NOLINT
  bool operator==(const RecordRef&) const = default;
};

enum class CopyMode { deep, shallow };

/// Bytes of an extendible record lifted out of the pool, link included.
struct RecordImage {
  std::vector<std::byte> bytes;

  ObjectId link(const TypeDescriptor& desc) const;
  void set_link(const TypeDescriptor& desc, ObjectId id);
};

/// Runtime for lazily extendible records over one pool.
///
/// Every extension-field access walks the link chain, counting one check per
/// level; a null link is materialized on the spot by allocating the extension,
/// running its INIT rule and storing the new id into the predecessor's link.
class ExtensionRuntime {
 public:
  explicit ExtensionRuntime(Pool& pool) : pool_(&pool) {}

  Pool& pool() const noexcept { return *pool_; }

  /// Serve repeated translations within a transaction from a small map. Only
  /// misses are counted as translations.
  void set_translation_cache(bool on);
  bool translation_cache() const noexcept { return cache_on_; }
  /// Skip id validation when translating.
  void set_unchecked_translation(bool on) noexcept { unchecked_ = on; }
  bool unchecked_translation() const noexcept { return unchecked_; }
  void set_copy_mode(CopyMode mode) noexcept { copy_mode_ = mode; }
  CopyMode copy_mode() const noexcept { return copy_mode_; }

  std::byte* address(ObjectId oid);

  /// Returns the record holding `level` (0 = the base record itself),
  /// materializing missing links up to it. Throws UnknownLevel.
  ObjectId ensure_extension(Transaction& tx, RecordRef ref, const TypeDescriptor& desc,
                            unsigned level);
  /// The record for `level` if already materialized, null otherwise.
  ObjectId find_extension(RecordRef ref, const TypeDescriptor& desc, unsigned level);
  /// Number of materialized levels (length of the non-null link prefix).
  unsigned extension_depth(RecordRef ref, const TypeDescriptor& desc);

  void read_field(RecordRef ref, const TypeDescriptor& desc, const FieldHandle& field,
                  std::span<std::byte> out);
  /// Writes go through the active transaction; without one, writing a field
  /// of an unextended level throws TxRequired.
  void write_field(RecordRef ref, const TypeDescriptor& desc, const FieldHandle& field,
                   std::span<const std::byte> bytes);

  template <typename T>
  T read(RecordRef ref, const TypeDescriptor& desc, const FieldHandle& field) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value{};
    read_field(ref, desc, field, std::as_writable_bytes(std::span{&value, 1}));
    return value;
  }
  template <typename T>
  T read(RecordRef ref, const TypeDescriptor& desc, std::string_view field) {
    return read<T>(ref, desc, desc.field(field));
  }
  template <typename T>
  void write(RecordRef ref, const TypeDescriptor& desc, const FieldHandle& field, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    write_field(ref, desc, field, std::as_bytes(std::span{&value, 1}));
  }
  template <typename T>
  void write(RecordRef ref, const TypeDescriptor& desc, std::string_view field, const T& value) {
    write<T>(ref, desc, desc.field(field), value);
  }

  /// New standalone copy of a standalone record. Deep mode clones the whole
  /// extension chain; shallow mode shares it.
  ObjectId deep_copy(Transaction& tx, ObjectId oid, const TypeDescriptor& desc);
  ObjectId deep_copy(Transaction& tx, ObjectId oid, const TypeDescriptor& desc, CopyMode mode);

  /// Frees the base record and every extension reachable from it.
  void free_extendible(Transaction& tx, ObjectId oid, const TypeDescriptor& desc);
  /// Frees the chain hanging off `ref`'s link and nulls the link.
  void release_extensions(Transaction& tx, RecordRef ref, const TypeDescriptor& desc);
  /// Frees a chain starting at `first`, without touching any link slot.
  void release_chain(Transaction& tx, ObjectId first, const TypeDescriptor& desc);
  /// Clones a chain starting at `first`; returns the clone's head.
  ObjectId clone_chain(Transaction& tx, ObjectId first, const TypeDescriptor& desc);

  RecordImage take(RecordRef ref, const TypeDescriptor& desc);
  /// Stores an image lifted by take(). In deep mode the chain is cloned for
  /// the destination and the source chain released, as a copy followed by
  /// destruction of the source would do.
  void put(Transaction& tx, RecordRef dst, const TypeDescriptor& desc, const RecordImage& image);
  void put(Transaction& tx, RecordRef dst, const TypeDescriptor& desc, const RecordImage& image,
           CopyMode mode);
  void relocate(Transaction& tx, RecordRef dst, RecordRef src, const TypeDescriptor& desc);

 private:
  ObjectId link_at(RecordRef ref, const TypeDescriptor& desc, unsigned level_of_record);
  ObjectId materialize(Transaction& tx, RecordRef ref, const TypeDescriptor& desc, unsigned level,
                       ObjectId predecessor, std::uint64_t link_slot_offset);

  Pool* pool_;
  bool cache_on_ = false;
  bool unchecked_ = false;
  CopyMode copy_mode_ = CopyMode::deep;
  std::uint64_t cache_epoch_ = 0;
  std::unordered_map<std::uint64_t, std::byte*> cache_;
};

}  // namespace leds
