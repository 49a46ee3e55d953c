// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace leds {

/// 128-bit persistent reference: pool identity plus byte offset from the pool
/// base. Stored in pool memory as two little-endian 64-bit words.
struct ObjectId {
  std::uint64_t pool_uuid = 0;
  std::uint64_t offset = 0;

  static constexpr ObjectId null() noexcept { return {}; }

  constexpr bool is_null() const noexcept { return pool_uuid == 0 && offset == 0; }
  constexpr explicit operator bool() const noexcept { return !is_null(); }

  /// Interior reference `bytes` past this id (same pool).
  constexpr ObjectId at(std::uint64_t bytes) const noexcept { return {pool_uuid, offset + bytes}; }

  friend constexpr auto operator<=>(const ObjectId&, const ObjectId&) = default;
};

static_assert(sizeof(ObjectId) == 16);

inline constexpr std::uint64_t kObjectIdSize = 16;

}  // namespace leds

template <>
struct std::hash<leds::ObjectId> {
  std::size_t operator()(const leds::ObjectId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.offset * 0x9E3779B97F4A7C15ull ^ id.pool_uuid);
  }
};
