// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "leds/object_id.hpp"

namespace leds {

enum class FieldKind { scalar, object_id, bytes };

struct FieldLayout {
  std::string name;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
  FieldKind kind = FieldKind::scalar;
};

/// A field without a placement, laid out back to back by `packed`.
struct FieldSpec {
  std::string name;
  std::uint64_t size = 0;
  FieldKind kind = FieldKind::scalar;
};

std::vector<FieldLayout> packed(std::initializer_list<FieldSpec> fields);
std::vector<FieldLayout> packed(const std::vector<FieldSpec>& fields);

/// Size of the trailing extension link carried by every extendible record.
inline constexpr std::uint64_t kLinkSize = kObjectIdSize;

class InitView;

/// Fills a zeroed extension payload from the object's lower levels.
using InitRule = std::function<void(const InitView&, std::span<std::byte> payload)>;

struct ExtensionDescriptor {
  unsigned level = 0;  // 1-based
  std::vector<FieldLayout> payload_fields;
  std::uint64_t payload_size = 0;
  InitRule init;

  std::uint64_t link_offset() const noexcept { return payload_size; }
  std::uint64_t record_size() const noexcept { return payload_size + kLinkSize; }
};

/// Where a field lives: level 0 is the base record.
struct FieldHandle {
  unsigned level = 0;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
};

/// An extendible record type: a base layout ending in a link slot plus an
/// append-only chain of extensions. Descriptors are immutable values.
class TypeDescriptor {
 public:
  TypeDescriptor() = default;

  const std::string& name() const noexcept { return name_; }
  const std::vector<FieldLayout>& base_fields() const noexcept { return base_fields_; }
  /// Offset of the extension link inside the base record.
  std::uint64_t link_offset() const noexcept { return link_offset_; }
  /// Unpadded bytes of the base record including the link.
  std::uint64_t record_size() const noexcept { return link_offset_ + kLinkSize; }
  /// Record size rounded up to the 16-byte allocation alignment.
  std::uint64_t base_size() const noexcept;
  const std::vector<ExtensionDescriptor>& extensions() const noexcept { return extensions_; }
  unsigned max_level() const noexcept { return static_cast<unsigned>(extensions_.size()); }
  const ExtensionDescriptor& extension(unsigned level) const;
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  /// Throws NoSuchField.
  FieldHandle field(std::string_view name) const;
  std::optional<FieldHandle> find_field(std::string_view name) const;

 private:
  friend TypeDescriptor define_type(std::string name, std::vector<FieldLayout> base_fields);
  friend TypeDescriptor append_extension(const TypeDescriptor& desc,
                                         std::vector<FieldLayout> payload_fields, InitRule init,
                                         std::optional<unsigned> level);

  std::string name_;
  std::vector<FieldLayout> base_fields_;
  std::uint64_t link_offset_ = 0;
  std::vector<ExtensionDescriptor> extensions_;
  std::uint64_t fingerprint_ = 0;
};

/// Throws OverlappingFields for overlapping or empty fields.
TypeDescriptor define_type(std::string name, std::vector<FieldLayout> base_fields);

/// Returns a copy of `desc` with one more extension level. When given,
/// `level` must equal max_level() + 1 (NonContiguousLevel otherwise).
TypeDescriptor append_extension(const TypeDescriptor& desc, std::vector<FieldLayout> payload_fields,
                                InitRule init = {}, std::optional<unsigned> level = std::nullopt);

/// Hash of a type's name and base fields; never zero.
std::uint64_t base_fingerprint(std::string_view name, std::span<const FieldLayout> fields);

/// Read-only view of an object's base record and already materialized lower
/// extension payloads, handed to INIT rules.
class InitView {
 public:
  InitView(const TypeDescriptor& desc, std::vector<std::span<const std::byte>> records)
      : desc_(&desc), records_(std::move(records)) {}

  const TypeDescriptor& type() const noexcept { return *desc_; }
  /// Record bytes for `level` (0 = base). Only levels below the one being
  /// initialized are available.
  std::span<const std::byte> record(unsigned level) const;
  std::span<const std::byte> bytes(std::string_view field) const;

  template <typename T>
  T get(std::string_view field) const {
    static_assert(std::is_trivially_copyable_v<T>);
    auto b = bytes(field);
    T value{};
    std::memcpy(&value, b.data(), std::min(sizeof(T), b.size()));
    return value;
  }

 private:
  const TypeDescriptor* desc_;
  std::vector<std::span<const std::byte>> records_;
};

namespace init {

/// Leaves the payload zeroed.
InitRule zero();
/// Copies an unsigned base/lower field into payload offset 0, zero-extending.
InitRule widen(std::string from);
/// Converts a signed integer field to a double at payload offset 0.
InitRule int_to_f64(std::string from);

}  // namespace init

}  // namespace leds
