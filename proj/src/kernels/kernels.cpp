// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include <limits>

#include "kernel_base.hpp"

namespace leds {

using kernels::RecordLayout;

std::string_view to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::skiplist: return "skiplist";
    case KernelKind::ctree: return "ctree";
    case KernelKind::btree: return "btree";
    case KernelKind::rbtree: return "rbtree";
    case KernelKind::hashmap: return "hashmap";
  }
  return "?";
}

std::string_view to_string(Variant variant) noexcept {
  switch (variant) {
    case Variant::original: return "original";
    case Variant::manual_change: return "manual-change";
    case Variant::manual_add: return "manual-add";
    case Variant::auto_change: return "auto-change";
    case Variant::auto_add: return "auto-add";
  }
  return "?";
}

std::string_view to_string(LayoutChange change) noexcept {
  return change == LayoutChange::change ? "change" : "add";
}

KernelKind parse_kernel(std::string_view name) {
  for (KernelKind k : kAllKernels)
    if (to_string(k) == name) return k;
  throw Error(ErrorCode::config_error, "unknown kernel '" + std::string(name) + "'");
}

LayoutChange parse_layout_change(std::string_view name) {
  if (name == "change") return LayoutChange::change;
  if (name == "add") return LayoutChange::add;
  throw Error(ErrorCode::config_error, "unknown layout change '" + std::string(name) + "'");
}

Variant manual_variant(LayoutChange change) noexcept {
  return change == LayoutChange::change ? Variant::manual_change : Variant::manual_add;
}

Variant auto_variant(LayoutChange change) noexcept {
  return change == LayoutChange::change ? Variant::auto_change : Variant::auto_add;
}

bool is_auto(Variant variant) noexcept {
  return variant == Variant::auto_change || variant == Variant::auto_add;
}

std::vector<MapEntry> MapKernel::entries(bool with_names) {
  std::vector<MapEntry> out;
  scan([&](const MapEntry& e) { out.push_back(e); }, with_names);
  return out;
}

TypeDescriptor record_type(KernelKind kind, Variant variant) {
  std::vector<FieldSpec> fields = {{"key", 4}, {"value", kObjectIdSize, FieldKind::object_id}};
  for (auto& f : kernels::kernel_fields(kind)) fields.push_back(f);
  TypeDescriptor d = define_type(kernels::record_type_name(kind), packed(fields));
  if (variant == Variant::auto_change)
    d = append_extension(d, packed({{"key64", 8}}), init::widen("key"));
  else if (variant == Variant::auto_add)
    d = append_extension(d, packed({{"name", kNameSize, FieldKind::bytes}}), init::zero());
  return d;
}

SchemaManifest make_auto_schema(KernelKind kind, LayoutChange change) {
  SchemaManifest m;
  if (change == LayoutChange::change)
    m.add(record_type(kind, Variant::auto_change), {{"widen", "key"}});
  else
    m.add(record_type(kind, Variant::auto_add), {{"zero", ""}});
  return m;
}

SchemaManifest original_schema(KernelKind kind) {
  SchemaManifest m;
  m.add(record_type(kind, Variant::original));
  return m;
}

std::uint64_t manual_record_size(KernelKind kind, LayoutChange change) {
  return RecordLayout::of(kind, manual_variant(change)).size;
}

std::unique_ptr<MapKernel> make_kernel(KernelKind kind, Variant variant, ExtensionRuntime& rt) {
  switch (kind) {
    case KernelKind::hashmap: return kernels::make_hashmap(variant, rt);
    case KernelKind::skiplist: return kernels::make_skiplist(variant, rt);
    case KernelKind::rbtree: return kernels::make_rbtree(variant, rt);
    case KernelKind::ctree: return kernels::make_ctree(variant, rt);
    case KernelKind::btree: return kernels::make_btree(variant, rt);
  }
  throw Error(ErrorCode::config_error, "unknown kernel");
}

MigrationPass make_manual_migrator(KernelKind kind, LayoutChange change) {
  switch (kind) {
    case KernelKind::hashmap: return kernels::hashmap_migrator(change);
    case KernelKind::skiplist: return kernels::skiplist_migrator(change);
    case KernelKind::rbtree: return kernels::rbtree_migrator(change);
    case KernelKind::ctree: return kernels::ctree_migrator(change);
    case KernelKind::btree: return kernels::btree_migrator(change);
  }
  throw Error(ErrorCode::config_error, "unknown kernel");
}

namespace kernels {

std::vector<FieldSpec> kernel_fields(KernelKind kind) {
  switch (kind) {
    case KernelKind::hashmap: return {{"next", kObjectIdSize, FieldKind::object_id}};
    case KernelKind::skiplist: return {{"next", 4 * kObjectIdSize, FieldKind::bytes}};
    case KernelKind::rbtree:
      return {{"color", 4},
              {"parent", kObjectIdSize, FieldKind::object_id},
              {"slots", 2 * kObjectIdSize, FieldKind::bytes}};
    case KernelKind::ctree:
    case KernelKind::btree: return {};
  }
  return {};
}

std::string record_type_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::hashmap: return "hashmap_node";
    case KernelKind::skiplist: return "skiplist_node";
    case KernelKind::rbtree: return "rbtree_node";
    case KernelKind::ctree: return "ctree_entry";
    case KernelKind::btree: return "btree_item";
  }
  return "record";
}

RecordLayout RecordLayout::of(KernelKind kind, Variant variant) {
  RecordLayout l;
  std::uint64_t extras = 0;
  for (auto& f : kernel_fields(kind)) extras += f.size;
  switch (variant) {
    case Variant::original:
    case Variant::auto_change:
    case Variant::auto_add:
      l.fields_off = 4 + kObjectIdSize;
      l.link_off = l.fields_off + extras;
      l.size = l.link_off + kLinkSize;
      break;
    case Variant::manual_change:
      l.key_width = 8;
      l.value_off = 8;
      l.fields_off = 8 + kObjectIdSize;
      l.size = l.fields_off + extras;
      break;
    case Variant::manual_add:
      l.name_off = 4 + kObjectIdSize;
      l.fields_off = l.name_off + kNameSize;
      l.size = l.fields_off + extras;
      break;
  }
  return l;
}

std::vector<std::byte> convert_record(KernelKind kind, const std::byte* v1, const RecordLayout& to) {
  RecordLayout from = RecordLayout::of(kind, Variant::original);
  std::vector<std::byte> out(to.size);
  std::uint64_t key = load_at<std::uint32_t>(v1);
  std::memcpy(out.data(), &key, to.key_width);
  std::memcpy(out.data() + to.value_off, v1 + from.value_off, kObjectIdSize);
  std::memcpy(out.data() + to.fields_off, v1 + from.fields_off, from.link_off - from.fields_off);
  return out;
}

KernelBase::KernelBase(KernelKind kind, Variant variant, ExtensionRuntime& rt)
    : MapKernel(variant),
      rt_(rt),
      pool_(rt.pool()),
      kind_(kind),
      desc_(record_type(kind, variant)),
      layout_(RecordLayout::of(kind, variant)) {
  if (variant == Variant::auto_change) key64_ = desc_.field("key64");
}

ObjectId KernelBase::open_root(std::uint64_t size,
                               const std::function<void(Transaction&, ObjectId)>& init) {
  if (!pool_.root().is_null() && pool_.root_size() >= size) return pool_.root();
  auto create = [&](Transaction& tx) {
    bool fresh = pool_.root().is_null();
    ObjectId root = pool_.get_root(size);
    if (fresh) init(tx, root);
    return root;
  };
  if (Transaction* tx = pool_.active_transaction()) return create(*tx);
  Transaction tx(pool_);
  ObjectId root = create(tx);
  tx.commit();
  return root;
}

std::uint64_t KernelBase::key_of(RecordRef r) {
  if (variant() == Variant::auto_change) return rt_.read<std::uint64_t>(r, desc_, key64_);
  const std::byte* p = addr(r.base) + r.at;
  return layout_.key_width == 8 ? load_at<std::uint64_t>(p) : load_at<std::uint32_t>(p);
}

std::uint64_t KernelBase::value_of(RecordRef r) {
  return load_at<std::uint64_t>(addr(r.base) + r.at + layout_.value_off + 8);
}

Name KernelBase::name_of(RecordRef r) {
  Name name{};
  if (variant() == Variant::auto_add)
    rt_.read_field(r, desc_, desc_.field("name"), name);
  else if (layout_.name_off != RecordLayout::kNone)
    std::memcpy(name.data(), addr(r.base) + r.at + layout_.name_off, kNameSize);
  return name;
}

void KernelBase::check_key(std::uint64_t key) const {
  if (variant() != Variant::auto_change && layout_.key_width == 4 &&
      key > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorCode::invalid_argument, "key does not fit the 32-bit layout");
}

std::vector<std::byte> KernelBase::record_image(std::uint64_t key, std::uint64_t value) const {
  std::vector<std::byte> image(layout_.size);
  std::memcpy(image.data(), &key, layout_.key_width);
  store_at(image.data() + layout_.value_off, value_slot(value));
  return image;
}

void KernelBase::write_record(Transaction& tx, RecordRef r, std::span<const std::byte> image,
                              std::uint64_t key) {
  tx.write(r.base, r.at, image);
  if (variant() == Variant::auto_change) {
    ObjectId ext = rt_.ensure_extension(tx, r, desc_, 1);
    ++fresh_extensions_;
    if (key > std::numeric_limits<std::uint32_t>::max()) tx.set(ext, key64_.offset, key);
  }
}

RecordImage KernelBase::take(RecordRef src) {
  const std::byte* p = addr(src.base) + src.at;
  return RecordImage{std::vector<std::byte>(p, p + layout_.size)};
}

void KernelBase::put(Transaction& tx, RecordRef dst, const RecordImage& image) {
  if (automatic())
    rt_.put(tx, dst, desc_, image);
  else
    tx.write(dst.base, dst.at, image.bytes);
}

void KernelBase::drop_record(Transaction& tx, RecordRef r) {
  if (!automatic()) return;
  rt_.release_chain(tx, id_at(r.base, r.at + layout_.link_off), desc_);
}

void KernelBase::upgrade(Transaction& tx, RecordRef r) {
  if (automatic()) rt_.ensure_extension(tx, r, desc_, 1);
}

bool KernelBase::upgraded(RecordRef r) {
  return extendible() && !id_at(r.base, r.at + layout_.link_off).is_null();
}

void KernelBase::corrupt(const std::string& what) const {
  throw Error(ErrorCode::corrupt_structure,
              std::string(to_string(kind_)) + " (" + std::string(to_string(variant())) + "): " + what);
}

}  // namespace kernels

}  // namespace leds
