// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "leds/extendible.hpp"

namespace leds {

/// Named INIT rule as it appears in a manifest: "zero", "widen" or
/// "int_to_f64", the latter two reading field `from`.
struct InitSpec {
  std::string rule = "zero";
  std::string from;
};

InitRule make_init_rule(const InitSpec& spec);

struct ManifestType {
  TypeDescriptor desc;
  std::vector<InitSpec> inits;  // one per extension level
};

/// A set of extendible type declarations, serialized as JSON:
///
///   {"types": [{"name": "node",
///               "fields": [{"name": "key", "size": 4, "kind": "scalar"}, ...],
///               "extensions": [{"fields": [...], "init": {"rule": "widen", "from": "key"}}]}]}
///
/// Fields without an "offset" are packed back to back.
class SchemaManifest {
 public:
  void add(TypeDescriptor desc, std::vector<InitSpec> inits = {});
  const std::vector<ManifestType>& types() const noexcept { return types_; }
  /// Throws NoSuchField when absent.
  const TypeDescriptor& type(std::string_view name) const;
  /// Combined base fingerprint of every type, in declaration order; never zero.
  std::uint64_t fingerprint() const noexcept;

  std::string to_json() const;
  static SchemaManifest parse(std::string_view json_text);
  static SchemaManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<ManifestType> types_;
};

}  // namespace leds
