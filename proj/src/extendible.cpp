// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "leds/extendible.hpp"

#include <algorithm>
#include <unordered_set>

#include "leds/error.hpp"
#include "leds/pool.hpp"

namespace leds {

namespace {

void validate_fields(const std::vector<FieldLayout>& fields, const char* what) {
  std::vector<const FieldLayout*> sorted;
  std::unordered_set<std::string_view> names;
  for (const auto& f : fields) {
    if (f.size == 0)
      throw Error(ErrorCode::overlapping_fields, std::string(what) + " field '" + f.name + "' is empty");
    if (f.name.empty() || !names.insert(f.name).second)
      throw Error(ErrorCode::overlapping_fields,
                  std::string(what) + " field name '" + f.name + "' is empty or repeated");
    sorted.push_back(&f);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const FieldLayout* a, const FieldLayout* b) { return a->offset < b->offset; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1]->offset + sorted[i - 1]->size > sorted[i]->offset)
      throw Error(ErrorCode::overlapping_fields,
                  "fields '" + sorted[i - 1]->name + "' and '" + sorted[i]->name + "' overlap");
  }
}

std::uint64_t extent(const std::vector<FieldLayout>& fields) {
  std::uint64_t end = 0;
  for (const auto& f : fields) end = std::max(end, f.offset + f.size);
  return end;
}

constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void fnv_u64(std::uint64_t& h, std::uint64_t v) { fnv(h, &v, sizeof v); }

}  // namespace

std::vector<FieldLayout> packed(const std::vector<FieldSpec>& fields) {
  std::vector<FieldLayout> out;
  std::uint64_t offset = 0;
  for (const auto& f : fields) {
    out.push_back({f.name, offset, f.size, f.kind});
    offset += f.size;
  }
  return out;
}

std::vector<FieldLayout> packed(std::initializer_list<FieldSpec> fields) {
  return packed(std::vector<FieldSpec>(fields));
}

std::uint64_t base_fingerprint(std::string_view name, std::span<const FieldLayout> fields) {
  std::uint64_t h = kFnvBasis;
  fnv(h, name.data(), name.size());
  fnv_u64(h, fields.size());
  for (const auto& f : fields) {
    fnv(h, f.name.data(), f.name.size());
    fnv_u64(h, f.offset);
    fnv_u64(h, f.size);
    fnv_u64(h, static_cast<std::uint64_t>(f.kind));
  }
  return h == 0 ? 1 : h;
}

std::uint64_t TypeDescriptor::base_size() const noexcept {
  return (record_size() + kAlignment - 1) / kAlignment * kAlignment;
}

const ExtensionDescriptor& TypeDescriptor::extension(unsigned level) const {
  if (level == 0 || level > extensions_.size())
    throw Error(ErrorCode::unknown_level,
                "type '" + name_ + "' has no extension level " + std::to_string(level));
  return extensions_[level - 1];
}

std::optional<FieldHandle> TypeDescriptor::find_field(std::string_view name) const {
  for (const auto& f : base_fields_)
    if (f.name == name) return FieldHandle{0, f.offset, f.size};
  for (const auto& e : extensions_)
    for (const auto& f : e.payload_fields)
      if (f.name == name) return FieldHandle{e.level, f.offset, f.size};
  return std::nullopt;
}

FieldHandle TypeDescriptor::field(std::string_view name) const {
  if (auto h = find_field(name)) return *h;
  throw Error(ErrorCode::no_such_field,
              "type '" + name_ + "' has no field '" + std::string(name) + "'");
}

TypeDescriptor define_type(std::string name, std::vector<FieldLayout> base_fields) {
  validate_fields(base_fields, "base");
  TypeDescriptor d;
  d.name_ = std::move(name);
  d.link_offset_ = extent(base_fields);
  d.base_fields_ = std::move(base_fields);
  d.fingerprint_ = base_fingerprint(d.name_, d.base_fields_);
  return d;
}

TypeDescriptor append_extension(const TypeDescriptor& desc, std::vector<FieldLayout> payload_fields,
                                InitRule init, std::optional<unsigned> level) {
  unsigned next = desc.max_level() + 1;
  if (level && *level != next)
    throw Error(ErrorCode::non_contiguous_level,
                "extension level " + std::to_string(*level) + " appended after level " +
                    std::to_string(next - 1));
  validate_fields(payload_fields, "extension");
  for (const auto& f : payload_fields)
    if (desc.find_field(f.name))
      throw Error(ErrorCode::overlapping_fields, "field '" + f.name + "' already exists");
  std::uint64_t size = extent(payload_fields);
  if (size == 0) throw Error(ErrorCode::invalid_argument, "extension payload is empty");

  TypeDescriptor out = desc;
  ExtensionDescriptor e;
  e.level = next;
  e.payload_fields = std::move(payload_fields);
  e.payload_size = size;
  e.init = init ? std::move(init) : init::zero();
  out.extensions_.push_back(std::move(e));
  return out;
}

std::span<const std::byte> InitView::record(unsigned level) const {
  if (level >= records_.size())
    throw Error(ErrorCode::unknown_level,
                "level " + std::to_string(level) + " is not visible to this INIT rule");
  return records_[level];
}

std::span<const std::byte> InitView::bytes(std::string_view field) const {
  FieldHandle h = desc_->field(field);
  return record(h.level).subspan(h.offset, h.size);
}

namespace init {

InitRule zero() {
  return [](const InitView&, std::span<std::byte>) {};
}

InitRule widen(std::string from) {
  return [from = std::move(from)](const InitView& view, std::span<std::byte> payload) {
    auto src = view.bytes(from);
    std::memcpy(payload.data(), src.data(), std::min(src.size(), payload.size()));
  };
}

InitRule int_to_f64(std::string from) {
  return [from = std::move(from)](const InitView& view, std::span<std::byte> payload) {
    auto src = view.bytes(from);
    std::int64_t v = 0;
    switch (src.size()) {
      case 1: v = view.get<std::int8_t>(from); break;
      case 2: v = view.get<std::int16_t>(from); break;
      case 4: v = view.get<std::int32_t>(from); break;
      default: v = view.get<std::int64_t>(from); break;
    }
    double d = static_cast<double>(v);
    std::memcpy(payload.data(), &d, std::min(sizeof d, payload.size()));
  };
}

}  // namespace init

}  // namespace leds
