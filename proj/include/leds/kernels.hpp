// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leds/extendible.hpp"
#include "leds/retention.hpp"
#include "leds/runtime.hpp"
#include "leds/schema_manifest.hpp"
#include "leds/transaction.hpp"

namespace leds {

enum class KernelKind { skiplist, ctree, btree, rbtree, hashmap };
enum class LayoutChange { change, add };

/// Program version a kernel instance is compiled for. `original` is the V1
/// layout; manual variants use the rewritten V2 records; automatic variants
/// keep the V1 records and reach the new field through an extension.
enum class Variant { original, manual_change, manual_add, auto_change, auto_add };

inline constexpr std::array<KernelKind, 5> kAllKernels = {
    KernelKind::skiplist, KernelKind::ctree, KernelKind::btree, KernelKind::rbtree,
    KernelKind::hashmap};

inline constexpr std::size_t kNameSize = 16;
using Name = std::array<std::byte, kNameSize>;

std::string_view to_string(KernelKind kind) noexcept;
std::string_view to_string(Variant variant) noexcept;
std::string_view to_string(LayoutChange change) noexcept;
/// Throws ConfigError for unknown names.
KernelKind parse_kernel(std::string_view name);
LayoutChange parse_layout_change(std::string_view name);

Variant manual_variant(LayoutChange change) noexcept;
Variant auto_variant(LayoutChange change) noexcept;
bool is_auto(Variant variant) noexcept;

struct MapEntry {
  std::uint64_t key = 0;
  std::uint64_t value = 0;
  Name name{};
  bool operator==(const MapEntry&) const = default;
};

/// A persistent ordered (or hashed) map rooted at its pool's root object.
///
/// Mutations take the caller's transaction. Lookups need none unless they
/// materialize an extension, which then happens in an implicit transaction.
class MapKernel {
 public:
  virtual ~MapKernel() = default;

  virtual KernelKind kind() const noexcept = 0;
  Variant variant() const noexcept { return variant_; }

  /// Returns false, leaving the map untouched, when `key` is present.
  virtual bool insert(Transaction& tx, std::uint64_t key, std::uint64_t value) = 0;
  virtual bool remove(Transaction& tx, std::uint64_t key) = 0;
  virtual std::optional<std::uint64_t> lookup(std::uint64_t key) = 0;
  /// Visits every entry once; in key order for the tree kinds. Names are
  /// read only when asked for (reading them upgrades automatic-add records).
  virtual void scan(const std::function<void(const MapEntry&)>& visit, bool with_names = false) = 0;
  virtual std::uint64_t size() = 0;
  /// Walks the whole structure; throws CorruptStructure on a violation.
  virtual void validate() = 0;
  /// Upgrades every record (automatic variants only).
  virtual void materialize_all(Transaction& tx) = 0;
  /// Key-holding records (nodes or entries) currently carrying an extension.
  virtual std::uint64_t extended_records() = 0;

  std::vector<MapEntry> entries(bool with_names = false);

  /// Extensions created for records this handle inserted, as opposed to
  /// upgrades of records that existed before.
  std::uint64_t fresh_extensions() const noexcept { return fresh_extensions_; }

 protected:
  explicit MapKernel(Variant variant) : variant_(variant) {}

  std::uint64_t fresh_extensions_ = 0;

 private:
  Variant variant_;
};

/// Opens (creating on first use) the kernel stored in `rt`'s pool root.
std::unique_ptr<MapKernel> make_kernel(KernelKind kind, Variant variant, ExtensionRuntime& rt);

/// Extendible record type for the kernel's key-holding record: the V1 layout
/// plus, for automatic variants, the layout change as an extension.
TypeDescriptor record_type(KernelKind kind, Variant variant);
SchemaManifest make_auto_schema(KernelKind kind, LayoutChange change);
SchemaManifest original_schema(KernelKind kind);

/// Byte size of one migrated record in the manual V2 layout.
std::uint64_t manual_record_size(KernelKind kind, LayoutChange change);

/// Version 1 -> 2 pass rewriting the V1 structure into the manual V2 layout.
MigrationPass make_manual_migrator(KernelKind kind, LayoutChange change);

inline constexpr std::uint32_t kOriginalVersion = 1;
inline constexpr std::uint32_t kUpdatedVersion = 2;

}  // namespace leds
