// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "leds/object_id.hpp"
#include "leds/pool.hpp"
#include "leds/runtime.hpp"
#include "leds/schema_manifest.hpp"
#include "leds/transaction.hpp"
#include "leds/write_stats.hpp"

namespace leds {

enum class RetentionModel { reset, manual, automatic };

struct MigrationStats {
  std::uint32_t from_version = 0;
  std::uint32_t to_version = 0;
  std::uint64_t objects_created = 0;
  std::uint64_t objects_freed = 0;
  /// Data records rewritten into the new layout and the user bytes spent on
  /// them; structural writes (roots, bucket arrays, sentinels) are excluded.
  std::uint64_t nodes_migrated = 0;
  std::uint64_t node_bytes = 0;
  WriteStats delta;
};

/// Handed to a pass's root transform. Allocations and frees made through it
/// are counted in the stats.
class MigrationContext {
 public:
  MigrationContext(Transaction& tx, ExtensionRuntime& rt, MigrationStats& stats)
      : tx_(&tx), rt_(&rt), stats_(&stats) {}

  Transaction& tx() const noexcept { return *tx_; }
  ExtensionRuntime& runtime() const noexcept { return *rt_; }
  Pool& pool() const noexcept { return rt_->pool(); }
  MigrationStats& stats() const noexcept { return *stats_; }

  ObjectId alloc(std::uint64_t size);
  void free(ObjectId oid);
  /// Writes a complete record of a migrated node and accounts it.
  void write_node(ObjectId oid, std::uint64_t offset, std::span<const std::byte> record);

 private:
  Transaction* tx_;
  ExtensionRuntime* rt_;
  MigrationStats* stats_;
};

/// Upgrade of one layout version to the next. `transform` receives the old
/// root and returns a temporary object of `new_root_size` bytes holding the
/// new root contents; it must free every old object it replaces.
struct MigrationPass {
  std::uint32_t from_version = 0;
  std::uint32_t to_version = 0;
  std::uint64_t new_root_size = 0;
  std::function<ObjectId(MigrationContext&, ObjectId old_root)> transform;
};

struct RetentionPolicy {
  RetentionModel model = RetentionModel::reset;
  std::string layout_name;
  std::uint32_t layout_version = 1;
  /// Capacity used when the Reset model (re)creates the pool.
  std::uint64_t capacity = 64ull << 20;
  std::vector<MigrationPass> passes;       // Manual
  std::optional<SchemaManifest> manifest;  // Automatic; recorded by Reset when set
};

struct RetentionResult {
  Pool pool;
  bool recreated = false;
  std::vector<MigrationStats> migrations;
};

/// Opens `path` under the policy's retention model.
///
/// Reset recreates the pool whenever the name or version differs (or the file
/// is missing). Manual runs registered passes until the stored version
/// reaches the expected one. Automatic checks the schema fingerprint and
/// bumps the version; upgrades then happen lazily on access.
RetentionResult open_with_policy(const std::filesystem::path& path, const RetentionPolicy& policy);

/// Runs one pass in a single transaction using the temporary-root pattern and
/// records `to_version` in the header.
MigrationStats run_migration(Pool& pool, const MigrationPass& pass);

}  // namespace leds
