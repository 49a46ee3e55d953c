// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace leds {

/// Per-session counters for a pool. Every byte stored to the mapping lands in
/// exactly one of bytes_user / bytes_log / bytes_meta. All fields only grow.
struct WriteStats {
  std::uint64_t bytes_user = 0;
  std::uint64_t bytes_log = 0;
  std::uint64_t bytes_meta = 0;
  std::uint64_t flush_events = 0;

  // Cost categories for the automatic-model breakdown.
  std::uint64_t allocations = 0;      // extension records materialized on access
  std::uint64_t translations = 0;     // ObjectId -> address translations performed
  std::uint64_t deep_copies = 0;      // extension chains cloned by deep copies
  std::uint64_t checks = 0;           // extension-link null checks
  std::uint64_t migration_bytes = 0;  // user bytes written by extension materialization

  std::uint64_t bytes_total() const noexcept { return bytes_user + bytes_log + bytes_meta; }
};

/// Difference `after - before`, field by field.
WriteStats operator-(const WriteStats& after, const WriteStats& before) noexcept;

}  // namespace leds
