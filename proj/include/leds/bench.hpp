// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leds/kernels.hpp"
#include "leds/retention.hpp"
#include "leds/write_stats.hpp"

namespace leds::bench {

enum class Pattern { del, ins, rand };
enum class ReportFormat { json, csv };

std::string_view to_string(Pattern p) noexcept;
std::string_view to_string(RetentionModel m) noexcept;
/// Throw ConfigError for unknown names.
Pattern parse_pattern(std::string_view name);
RetentionModel parse_model(std::string_view name);
ReportFormat parse_format(std::string_view name);

struct WorkloadConfig {
  KernelKind kernel = KernelKind::hashmap;
  Pattern pattern = Pattern::del;
  std::uint64_t n = 1000;
  std::uint64_t seed = 1;
  LayoutChange layout = LayoutChange::change;
  RetentionModel model = RetentionModel::automatic;
  unsigned trials = 5;
  /// Fraction of the original keys the update phase deletes (DEL only).
  double working_set_ratio = 1.0;
  bool cache_translations = false;
  bool shallow_copy = false;
  /// Scratch pool path; snapshots are written next to it.
  std::filesystem::path pool = "ledsbench.pool";
  /// 0 picks a size from `n`.
  std::uint64_t capacity = 0;
  /// Schema manifest for the automatic model; built in when unset.
  std::optional<std::filesystem::path> manifest;
};

/// Throws ConfigError when a field is out of range.
void check_config(const WorkloadConfig& config);
std::uint64_t pool_capacity(const WorkloadConfig& config);

struct Op {
  enum class Kind { insert, remove, toggle };
  Kind kind;
  std::uint64_t key;
  std::uint64_t value;
  bool operator==(const Op&) const = default;
};

struct Workload {
  std::vector<Op> original;
  std::vector<Op> update;
};

/// Keys are unique 32-bit values for DEL and INS, and drawn from [1, N] for
/// RAND. `ratio` trims the DEL update phase to the first ratio*N keys.
Workload gen_workload(Pattern pattern, std::uint64_t n, std::uint64_t seed, double ratio = 1.0);

/// Runs each op in its own transaction. Toggle removes a present key and
/// inserts an absent one.
void apply(MapKernel& map, Pool& pool, const std::vector<Op>& ops);

struct PhaseResult {
  bool ran = false;
  double seconds = 0;  // trial mean
  double stddev = 0;
  double best = 0;
  /// Counters of the first trial; identical across trials.
  WriteStats writes;
};

struct Breakdown {
  double alloc = 0;
  double translate = 0;
  double deepcopy = 0;
  double other = 0;
  /// Per category: false when the share came from a per-event cost estimate
  /// because the timed difference was below the clock's resolution.
  bool alloc_timed = true;
  bool translate_timed = true;
  bool deepcopy_timed = true;
};

struct BenchReport {
  WorkloadConfig config;
  PhaseResult original, retain, manual, automatic, reset;
  std::optional<double> overhead_manual_pct;
  std::optional<double> overhead_auto_pct;
  std::uint64_t migrations_manual = 0;
  std::uint64_t manual_node_bytes = 0;
  /// Pre-existing records upgraded by the automatic phase.
  std::uint64_t migrations_auto = 0;
  std::optional<Breakdown> breakdown;
  std::uint64_t final_size = 0;
  bool valid = true;

  /// Counters of the configured model's phases.
  WriteStats model_bytes() const;
  std::uint64_t migrations() const;
};

/// Overheads as defined for the report.
double overhead_manual(double t_retain, double t_manual);
double overhead_auto(double t_auto, double t_manual);

BenchReport run_experiment(const WorkloadConfig& config);
std::vector<BenchReport> sweep_dataset_size(const WorkloadConfig& config,
                                            const std::vector<std::uint64_t>& sizes = {100, 1000, 10000,
                                                                                       100000});
std::vector<BenchReport> sweep_working_set(const WorkloadConfig& config,
                                           const std::vector<double>& ratios = {0.001, 0.01, 0.1, 1.0});
/// Automatic-model run plus one differential run per cost category.
BenchReport breakdown_report(const WorkloadConfig& config);

std::string to_json(const std::vector<BenchReport>& reports);
std::string to_csv(const std::vector<BenchReport>& reports);
/// Restores what to_json wrote (phase counters beyond the byte ledger are not kept).
std::vector<BenchReport> parse_json(std::string_view text);
void emit_report(const std::vector<BenchReport>& reports, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace leds::bench
