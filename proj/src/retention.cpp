// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "leds/retention.hpp"

#include <algorithm>

#include "leds/error.hpp"

namespace leds {

ObjectId MigrationContext::alloc(std::uint64_t size) {
  ++stats_->objects_created;
  return tx_->alloc_zeroed(size);
}

void MigrationContext::free(ObjectId oid) {
  ++stats_->objects_freed;
  tx_->free(oid);
}

void MigrationContext::write_node(ObjectId oid, std::uint64_t offset,
                                  std::span<const std::byte> record) {
  ++stats_->nodes_migrated;
  stats_->node_bytes += record.size();
  tx_->write(oid, offset, record);
}

MigrationStats run_migration(Pool& pool, const MigrationPass& pass) {
  if (pool.layout_version() != pass.from_version)
    throw Error(ErrorCode::invalid_argument,
                "pool is at version " + std::to_string(pool.layout_version()) + ", pass expects " +
                    std::to_string(pass.from_version));
  if (pass.to_version <= pass.from_version)
    throw Error(ErrorCode::version_regression, "migration must raise the layout version");
  if (!pass.transform || pass.new_root_size == 0)
    throw Error(ErrorCode::invalid_argument, "migration pass has no root transform");

  MigrationStats stats;
  stats.from_version = pass.from_version;
  stats.to_version = pass.to_version;
  WriteStats before = pool.stats();
  ExtensionRuntime rt(pool);
  Transaction tx(pool);
  MigrationContext ctx(tx, rt, stats);

  ObjectId temp = pass.transform(ctx, pool.root());
  if (!pool.root().is_null()) {
    pool.drop_root(tx);
    ++stats.objects_freed;
  }
  ObjectId root = pool.get_root(pass.new_root_size);
  ++stats.objects_created;
  tx.copy_bytes(root, temp, pass.new_root_size);
  ctx.free(temp);
  pool.set_layout_version(pass.to_version);
  tx.commit();
  stats.delta = pool.stats() - before;
  return stats;
}

namespace {

RetentionResult open_reset(const std::filesystem::path& path, const RetentionPolicy& policy) {
  if (std::filesystem::exists(path)) {
    try {
      Pool pool = Pool::open(path, policy.layout_name);
      if (pool.layout_version() == policy.layout_version) return {std::move(pool), false, {}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::layout_mismatch) throw;
    }
    Pool::remove(path);
  }
  Pool pool = Pool::create(path, policy.layout_name, policy.capacity);
  pool.set_layout_version(policy.layout_version);
  if (policy.manifest) pool.set_schema_fingerprint(policy.manifest->fingerprint());
  return {std::move(pool), true, {}};
}

RetentionResult open_manual(const std::filesystem::path& path, const RetentionPolicy& policy) {
  Pool pool = Pool::open(path, policy.layout_name);
  RetentionResult result{std::move(pool), false, {}};
  Pool& p = result.pool;
  if (p.layout_version() > policy.layout_version)
    throw Error(ErrorCode::version_regression,
                "pool version " + std::to_string(p.layout_version()) + " is newer than " +
                    std::to_string(policy.layout_version));
  while (p.layout_version() < policy.layout_version) {
    std::uint32_t at = p.layout_version();
    auto it = std::find_if(policy.passes.begin(), policy.passes.end(),
                           [&](const MigrationPass& m) { return m.from_version == at; });
    if (it == policy.passes.end() || it->to_version > policy.layout_version)
      throw Error(ErrorCode::migration_missing,
                  "no migration registered from version " + std::to_string(at));
    result.migrations.push_back(run_migration(p, *it));
  }
  return result;
}

RetentionResult open_automatic(const std::filesystem::path& path, const RetentionPolicy& policy) {
  if (!policy.manifest)
    throw Error(ErrorCode::config_error, "the automatic model needs a schema manifest");
  Pool pool = Pool::open(path, policy.layout_name);
  std::uint64_t expected = policy.manifest->fingerprint();
  std::uint64_t stored = pool.schema_fingerprint();
  if (stored != 0 && stored != expected)
    throw Error(ErrorCode::fingerprint_mismatch,
                "base layout changed; only extensions can be retained automatically");
  if (pool.layout_version() > policy.layout_version)
    throw Error(ErrorCode::version_regression,
                "pool version " + std::to_string(pool.layout_version()) + " is newer than " +
                    std::to_string(policy.layout_version));
  if (stored == 0 || pool.layout_version() != policy.layout_version) {
    Transaction tx(pool);
    if (stored == 0) pool.set_schema_fingerprint(expected);
    pool.set_layout_version(policy.layout_version);
    tx.commit();
  }
  return {std::move(pool), false, {}};
}

}  // namespace

RetentionResult open_with_policy(const std::filesystem::path& path, const RetentionPolicy& policy) {
  switch (policy.model) {
    case RetentionModel::reset: return open_reset(path, policy);
    case RetentionModel::manual: return open_manual(path, policy);
    case RetentionModel::automatic: return open_automatic(path, policy);
  }
  throw Error(ErrorCode::config_error, "unknown retention model");
}

}  // namespace leds
