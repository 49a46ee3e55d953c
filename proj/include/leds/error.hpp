// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace leds {

enum class ErrorCode {
  io_error,
  capacity_too_small,
  already_exists,
  layout_mismatch,
  bad_magic,
  pool_locked,
  pool_closed,
  out_of_space,
  out_of_bounds,
  foreign_pool,
  double_free,
  invalid_argument,
  nested_transaction,
  tx_state_error,
  tx_required,
  log_full,
  simulated_crash,
  overlapping_fields,
  non_contiguous_level,
  unknown_level,
  no_such_field,
  fingerprint_mismatch,
  migration_missing,
  version_regression,
  config_error,
  corrupt_structure,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown when an armed crash plan fires. The pool that raised it is
/// unusable afterwards; reopen the file with `recover()`.
class SimulatedCrash : public Error {
 public:
  explicit SimulatedCrash(std::uint64_t ordinal)
      : Error(ErrorCode::simulated_crash, "crash at persistent write #" + std::to_string(ordinal)),
        ordinal_(ordinal) {}

  std::uint64_t ordinal() const noexcept { return ordinal_; }

 private:
  std::uint64_t ordinal_;
};

}  // namespace leds
