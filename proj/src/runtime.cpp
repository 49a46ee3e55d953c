// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "leds/runtime.hpp"

#include <optional>

#include "leds/error.hpp"

namespace leds {

namespace {

constexpr std::size_t kCacheLimit = 256;

ObjectId load_id(const std::byte* p) {
  ObjectId id;
  std::memcpy(&id, p, sizeof id);
  return id;
}

}  // namespace

ObjectId RecordImage::link(const TypeDescriptor& desc) const {
  return load_id(bytes.data() + desc.link_offset());
}

void RecordImage::set_link(const TypeDescriptor& desc, ObjectId id) {
  std::memcpy(bytes.data() + desc.link_offset(), &id, sizeof id);
}

void ExtensionRuntime::set_translation_cache(bool on) {
  cache_on_ = on;
  cache_.clear();
}

std::byte* ExtensionRuntime::address(ObjectId oid) {
  if (cache_on_) {
    std::uint64_t epoch = pool_->transaction_epoch();
    if (epoch != cache_epoch_) {
      cache_.clear();
      cache_epoch_ = epoch;
    }
    if (auto it = cache_.find(oid.offset); it != cache_.end() && oid.pool_uuid == pool_->uuid())
      return it->second;
  }
  std::byte* p;
  if (unchecked_) {
    p = pool_->translate_unchecked(oid);
    ++pool_->counters().translations;
  } else {
    p = pool_->translate(oid);
  }
  if (cache_on_) {
    if (cache_.size() >= kCacheLimit) cache_.clear();
    cache_.emplace(oid.offset, p);
  }
  return p;
}

ObjectId ExtensionRuntime::materialize(Transaction& tx, RecordRef ref, const TypeDescriptor& desc,
                                       unsigned level, ObjectId predecessor,
                                       std::uint64_t link_slot_offset) {
  const ExtensionDescriptor& ext = desc.extension(level);
  WriteStats& c = pool_->counters();
  std::uint64_t user_before = c.bytes_user;

  std::vector<std::span<const std::byte>> lower;
  lower.emplace_back(address(ref.base) + ref.at, desc.record_size());
  ObjectId rec = ref.base;
  std::uint64_t slot = ref.at + desc.link_offset();
  for (unsigned l = 1; l < level; ++l) {
    rec = load_id(address(rec) + slot);
    lower.emplace_back(address(rec), desc.extension(l).record_size());
    slot = desc.extension(l).link_offset();
  }

  ObjectId id = tx.alloc_zeroed(ext.record_size());
  ++c.allocations;
  std::vector<std::byte> image(ext.record_size());
  ext.init(InitView(desc, std::move(lower)), std::span(image).first(ext.payload_size));
  tx.write(id, 0, image);
  tx.set(predecessor, link_slot_offset, id);
  c.migration_bytes += c.bytes_user - user_before;
  return id;
}

ObjectId ExtensionRuntime::ensure_extension(Transaction& tx, RecordRef ref,
                                            const TypeDescriptor& desc, unsigned level) {
  if (level > desc.max_level())
    throw Error(ErrorCode::unknown_level,
                "type '" + desc.name() + "' has no extension level " + std::to_string(level));
  ObjectId rec = ref.base;
  std::uint64_t slot = ref.at + desc.link_offset();
  WriteStats& c = pool_->counters();
  for (unsigned l = 1; l <= level; ++l) {
    ++c.checks;
    ObjectId next = load_id(address(rec) + slot);
    if (next.is_null()) next = materialize(tx, ref, desc, l, rec, slot);
    rec = next;
    slot = desc.extension(l).link_offset();
  }
  return rec;
}

ObjectId ExtensionRuntime::find_extension(RecordRef ref, const TypeDescriptor& desc,
                                          unsigned level) {
  if (level > desc.max_level())
    throw Error(ErrorCode::unknown_level,
                "type '" + desc.name() + "' has no extension level " + std::to_string(level));
  ObjectId rec = ref.base;
  std::uint64_t slot = ref.at + desc.link_offset();
  WriteStats& c = pool_->counters();
  for (unsigned l = 1; l <= level; ++l) {
    ++c.checks;
    rec = load_id(address(rec) + slot);
    if (rec.is_null()) return rec;
    slot = desc.extension(l).link_offset();
  }
  return rec;
}

unsigned ExtensionRuntime::extension_depth(RecordRef ref, const TypeDescriptor& desc) {
  std::byte* p = pool_->translate(ref.base) + ref.at + desc.link_offset();
  unsigned depth = 0;
  for (ObjectId next = load_id(p); !next.is_null(); ++depth) {
    if (depth >= desc.max_level()) break;
    next = load_id(pool_->translate(next) + desc.extension(depth + 1).link_offset());
  }
  return depth;
}

void ExtensionRuntime::read_field(RecordRef ref, const TypeDescriptor& desc,
                                  const FieldHandle& field, std::span<std::byte> out) {
  std::size_t n = std::min<std::size_t>(out.size(), field.size);
  if (field.level == 0) {
    std::memcpy(out.data(), address(ref.base) + ref.at + field.offset, n);
    return;
  }
  ObjectId rec = ref.base;
  std::uint64_t slot = ref.at + desc.link_offset();
  std::optional<Transaction> implicit;
  WriteStats& c = pool_->counters();
  for (unsigned l = 1; l <= field.level; ++l) {
    ++c.checks;
    ObjectId next = load_id(address(rec) + slot);
    if (next.is_null()) {
      Transaction* tx = pool_->active_transaction();
      if (tx == nullptr) tx = &implicit.emplace(*pool_);
      next = materialize(*tx, ref, desc, l, rec, slot);
    }
    rec = next;
    slot = desc.extension(l).link_offset();
  }
  if (implicit) implicit->commit();
  std::memcpy(out.data(), address(rec) + field.offset, n);
}

void ExtensionRuntime::write_field(RecordRef ref, const TypeDescriptor& desc,
                                   const FieldHandle& field, std::span<const std::byte> bytes) {
  if (bytes.size() > field.size)
    throw Error(ErrorCode::out_of_bounds, "value wider than the field");
  Transaction* tx = pool_->active_transaction();
  ObjectId rec = ref.base;
  std::uint64_t offset = ref.at + field.offset;
  if (field.level != 0) {
    if (tx != nullptr) {
      rec = ensure_extension(*tx, ref, desc, field.level);
    } else {
      rec = find_extension(ref, desc, field.level);
      if (rec.is_null())
        throw Error(ErrorCode::tx_required, "writing an unextended field needs a transaction");
    }
    offset = field.offset;
  }
  if (tx != nullptr)
    tx->write(rec, offset, bytes);
  else
    pool_->store(rec, offset, bytes);
}

ObjectId ExtensionRuntime::clone_chain(Transaction& tx, ObjectId first, const TypeDescriptor& desc) {
  if (first.is_null()) return first;
  std::vector<ObjectId> clones;
  unsigned level = 1;
  for (ObjectId cur = first; !cur.is_null(); ++level) {
    const ExtensionDescriptor& ext = desc.extension(level);
    ObjectId copy = tx.alloc_zeroed(ext.record_size());
    tx.copy_bytes(copy, cur, ext.record_size());
    clones.push_back(copy);
    cur = load_id(address(cur) + ext.link_offset());
  }
  for (std::size_t i = 0; i + 1 < clones.size(); ++i)
    tx.set(clones[i], desc.extension(static_cast<unsigned>(i + 1)).link_offset(), clones[i + 1]);
  ++pool_->counters().deep_copies;
  return clones.front();
}

void ExtensionRuntime::release_chain(Transaction& tx, ObjectId first, const TypeDescriptor& desc) {
  unsigned level = 1;
  for (ObjectId cur = first; !cur.is_null(); ++level) {
    ObjectId next = load_id(address(cur) + desc.extension(level).link_offset());
    tx.free(cur);
    cur = next;
  }
}

void ExtensionRuntime::release_extensions(Transaction& tx, RecordRef ref,
                                          const TypeDescriptor& desc) {
  ObjectId first = load_id(address(ref.base) + ref.at + desc.link_offset());
  if (first.is_null()) return;
  release_chain(tx, first, desc);
  tx.set(ref.base, ref.at + desc.link_offset(), ObjectId::null());
}

ObjectId ExtensionRuntime::deep_copy(Transaction& tx, ObjectId oid, const TypeDescriptor& desc) {
  return deep_copy(tx, oid, desc, copy_mode_);
}

ObjectId ExtensionRuntime::deep_copy(Transaction& tx, ObjectId oid, const TypeDescriptor& desc,
                                     CopyMode mode) {
  ObjectId copy = tx.alloc_zeroed(desc.base_size());
  tx.copy_bytes(copy, oid, desc.record_size());
  if (mode == CopyMode::deep) {
    ObjectId first = load_id(address(oid) + desc.link_offset());
    if (!first.is_null()) tx.set(copy, desc.link_offset(), clone_chain(tx, first, desc));
  }
  return copy;
}

void ExtensionRuntime::free_extendible(Transaction& tx, ObjectId oid, const TypeDescriptor& desc) {
  if (tx.freed_here(oid) || !pool_->is_allocated(oid))
    throw Error(ErrorCode::double_free, "object is not allocated");
  release_chain(tx, load_id(address(oid) + desc.link_offset()), desc);
  tx.free(oid);
}

RecordImage ExtensionRuntime::take(RecordRef ref, const TypeDescriptor& desc) {
  const std::byte* p = address(ref.base) + ref.at;
  return RecordImage{std::vector<std::byte>(p, p + desc.record_size())};
}

void ExtensionRuntime::put(Transaction& tx, RecordRef dst, const TypeDescriptor& desc,
                           const RecordImage& image) {
  put(tx, dst, desc, image, copy_mode_);
}

void ExtensionRuntime::put(Transaction& tx, RecordRef dst, const TypeDescriptor& desc,
                           const RecordImage& image, CopyMode mode) {
  ObjectId src_chain = image.link(desc);
  if (mode == CopyMode::shallow || src_chain.is_null()) {
    tx.write(dst.base, dst.at, image.bytes);
    return;
  }
  RecordImage copy = image;
  copy.set_link(desc, clone_chain(tx, src_chain, desc));
  tx.write(dst.base, dst.at, copy.bytes);
  release_chain(tx, src_chain, desc);
}

void ExtensionRuntime::relocate(Transaction& tx, RecordRef dst, RecordRef src,
                                const TypeDescriptor& desc) {
  put(tx, dst, desc, take(src, desc));
}

}  // namespace leds
