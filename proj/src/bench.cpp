// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "leds/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "leds/error.hpp"

namespace leds::bench {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t value_for(std::uint64_t key, std::uint64_t seed) {
  std::uint64_t x = key ^ (seed * 0x9E3779B97F4A7C15ull);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string layout_name(KernelKind kind) { return "leds." + std::string(leds::to_string(kind)); }

}  // namespace

std::string_view to_string(Pattern p) noexcept {
  switch (p) {
    case Pattern::del: return "del";
    case Pattern::ins: return "ins";
    case Pattern::rand: return "rand";
  }
  return "?";
}

std::string_view to_string(RetentionModel m) noexcept {
  switch (m) {
    case RetentionModel::reset: return "reset";
    case RetentionModel::manual: return "manual";
    case RetentionModel::automatic: return "auto";
  }
  return "?";
}

Pattern parse_pattern(std::string_view name) {
  for (Pattern p : {Pattern::del, Pattern::ins, Pattern::rand})
    if (to_string(p) == name) return p;
  throw Error(ErrorCode::config_error, "unknown pattern '" + std::string(name) + "'");
}

RetentionModel parse_model(std::string_view name) {
  for (RetentionModel m : {RetentionModel::reset, RetentionModel::manual, RetentionModel::automatic})
    if (to_string(m) == name) return m;
  if (name == "automatic") return RetentionModel::automatic;
  throw Error(ErrorCode::config_error, "unknown model '" + std::string(name) + "'");
}

ReportFormat parse_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw Error(ErrorCode::config_error, "unknown report format '" + std::string(name) + "'");
}

void check_config(const WorkloadConfig& c) {
  if (c.n < 1) throw Error(ErrorCode::config_error, "n must be at least 1");
  if (c.trials < 1) throw Error(ErrorCode::config_error, "trials must be at least 1");
  if (!(c.working_set_ratio > 0 && c.working_set_ratio <= 1))
    throw Error(ErrorCode::config_error, "working-set ratio must be in (0, 1]");
  if (c.n > (1ull << 31)) throw Error(ErrorCode::config_error, "n exceeds the 32-bit key space");
}

std::uint64_t pool_capacity(const WorkloadConfig& c) {
  if (c.capacity) return c.capacity;
  return (64ull << 20) + c.n * 2048;
}

Workload gen_workload(Pattern pattern, std::uint64_t n, std::uint64_t seed, double ratio) {
  std::mt19937_64 rng(seed);
  Workload w;
  auto distinct = [&](std::uint64_t count) {
    std::vector<std::uint64_t> keys;
    std::unordered_set<std::uint64_t> seen;
    keys.reserve(count);
    seen.reserve(count * 2);
    while (keys.size() < count) {
      std::uint64_t k = 1 + rng() % 0xFFFFFFFEull;
      if (seen.insert(k).second) keys.push_back(k);
    }
    return keys;
  };
  switch (pattern) {
    case Pattern::del: {
      auto keys = distinct(n);
      for (auto k : keys) w.original.push_back({Op::Kind::insert, k, value_for(k, seed)});
      auto deletes = static_cast<std::uint64_t>(std::llround(ratio * static_cast<double>(n)));
      deletes = std::clamp<std::uint64_t>(deletes, ratio > 0 ? 1 : 0, n);
      for (std::uint64_t i = 0; i < deletes; ++i) w.update.push_back({Op::Kind::remove, keys[i], 0});
      break;
    }
    case Pattern::ins: {
      auto keys = distinct(2 * n);
      for (std::uint64_t i = 0; i < n; ++i)
        w.original.push_back({Op::Kind::insert, keys[i], value_for(keys[i], seed)});
      for (std::uint64_t i = n; i < 2 * n; ++i)
        w.update.push_back({Op::Kind::insert, keys[i], value_for(keys[i], seed)});
      break;
    }
    case Pattern::rand: {
      for (std::uint64_t i = 0; i < n; ++i) {
        std::uint64_t k = 1 + rng() % n;
        w.original.push_back({Op::Kind::toggle, k, value_for(k, seed)});
      }
      w.update = w.original;
      break;
    }
  }
  return w;
}

void apply(MapKernel& map, Pool& pool, const std::vector<Op>& ops) {
  for (const Op& op : ops) {
    Transaction tx(pool);
    switch (op.kind) {
      case Op::Kind::insert: map.insert(tx, op.key, op.value); break;
      case Op::Kind::remove: map.remove(tx, op.key); break;
      case Op::Kind::toggle:
        if (map.lookup(op.key))
          map.remove(tx, op.key);
        else
          map.insert(tx, op.key, op.value);
        break;
    }
    tx.commit();
  }
}

double overhead_manual(double t_retain, double t_manual) { return 100.0 * t_retain / t_manual; }

double overhead_auto(double t_auto, double t_manual) { return 100.0 * (t_auto - t_manual) / t_manual; }

WriteStats BenchReport::model_bytes() const {
  WriteStats w;
  auto add = [&](const PhaseResult& p) {
    if (!p.ran) return;
    w.bytes_user += p.writes.bytes_user;
    w.bytes_log += p.writes.bytes_log;
    w.bytes_meta += p.writes.bytes_meta;
  };
  switch (config.model) {
    case RetentionModel::reset: add(reset); break;
    case RetentionModel::manual:
      add(retain);
      add(manual);
      break;
    case RetentionModel::automatic: add(automatic); break;
  }
  return w;
}

std::uint64_t BenchReport::migrations() const {
  switch (config.model) {
    case RetentionModel::reset: return 0;
    case RetentionModel::manual: return migrations_manual;
    case RetentionModel::automatic: return migrations_auto;
  }
  return 0;
}

namespace {

struct Timings {
  std::vector<double> samples;

  void finish(PhaseResult& p) const {
    p.ran = true;
    double n = static_cast<double>(samples.size());
    p.seconds = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    p.best = *std::min_element(samples.begin(), samples.end());
    double var = 0;
    for (double s : samples) var += (s - p.seconds) * (s - p.seconds);
    p.stddev = samples.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  }
};

enum class AutoTweak { none, prematerialize, fast_translation, shallow };

/// Drives the phases of one configuration over a scratch pool and a V1
/// snapshot kept next to it.
class Runner {
 public:
  explicit Runner(const WorkloadConfig& c)
      : c_(c),
        work_(c.pool),
        snapshot_(c.pool.string() + ".v1"),
        name_(layout_name(c.kernel)),
        workload_(gen_workload(c.pattern, c.n, c.seed, c.working_set_ratio)) {
    if (c.manifest)
      manifest_ = SchemaManifest::load(*c.manifest);
    else
      manifest_ = make_auto_schema(c.kernel, c.layout);
  }

  ~Runner() {
    std::error_code ec;
    std::filesystem::remove(snapshot_, ec);
    std::filesystem::remove(work_, ec);
  }

  void original(BenchReport& r) {
    Timings t;
    for (unsigned i = 0; i < c_.trials; ++i) {
      discard(work_);
      Pool pool = Pool::create(work_, name_, pool_capacity(c_));
      pool.set_layout_version(kOriginalVersion);
      ExtensionRuntime rt(pool);
      auto map = make_kernel(c_.kernel, Variant::original, rt);
      WriteStats before = pool.stats();
      auto t0 = Clock::now();
      apply(*map, pool, workload_.original);
      t.samples.push_back(seconds_since(t0));
      if (i == 0) r.original.writes = pool.stats() - before;
    }
    t.finish(r.original);
    discard(snapshot_);
    std::filesystem::copy_file(work_, snapshot_);
  }

  void manual(BenchReport& r, bool timed_update) {
    Timings retain, update;
    for (unsigned i = 0; i < c_.trials; ++i) {
      restore();
      RetentionPolicy policy;
      policy.model = RetentionModel::manual;
      policy.layout_name = name_;
      policy.layout_version = kUpdatedVersion;
      policy.passes.push_back(make_manual_migrator(c_.kernel, c_.layout));
      auto t0 = Clock::now();
      RetentionResult opened = open_with_policy(work_, policy);
      retain.samples.push_back(seconds_since(t0));
      Pool& pool = opened.pool;
      if (i == 0) {
        for (auto& m : opened.migrations) {
          r.migrations_manual += m.nodes_migrated;
          r.manual_node_bytes += m.node_bytes;
          r.retain.writes = m.delta;
        }
      }
      if (!timed_update) continue;
      ExtensionRuntime rt(pool);
      auto map = make_kernel(c_.kernel, manual_variant(c_.layout), rt);
      WriteStats before = pool.stats();
      auto t1 = Clock::now();
      apply(*map, pool, workload_.update);
      update.samples.push_back(seconds_since(t1));
      if (i == 0) {
        r.manual.writes = pool.stats() - before;
        finish_checks(r, *map, manual_entries_);
      }
    }
    retain.finish(r.retain);
    if (timed_update) update.finish(r.manual);
  }

  /// Runs the automatic update phase; returns its counters and fills `phase`.
  WriteStats automatic(BenchReport& r, PhaseResult& phase, AutoTweak tweak, bool record) {
    Timings t;
    WriteStats first;
    for (unsigned i = 0; i < c_.trials; ++i) {
      restore();
      RetentionPolicy policy;
      policy.model = RetentionModel::automatic;
      policy.layout_name = name_;
      policy.layout_version = kUpdatedVersion;
      policy.manifest = manifest_;
      RetentionResult opened = open_with_policy(work_, policy);
      Pool& pool = opened.pool;
      ExtensionRuntime rt(pool);
      rt.set_translation_cache(c_.cache_translations || tweak == AutoTweak::fast_translation);
      rt.set_unchecked_translation(tweak == AutoTweak::fast_translation);
      rt.set_copy_mode(c_.shallow_copy || tweak == AutoTweak::shallow ? CopyMode::shallow : CopyMode::deep);
      auto map = make_kernel(c_.kernel, auto_variant(c_.layout), rt);
      if (tweak == AutoTweak::prematerialize) {
        Transaction tx(pool);
        for (const Op& op : workload_.update) map->lookup(op.key);
        tx.commit();
      }
      WriteStats before = pool.stats();
      std::uint64_t fresh = map->fresh_extensions();
      auto t0 = Clock::now();
      apply(*map, pool, workload_.update);
      t.samples.push_back(seconds_since(t0));
      if (i == 0) {
        first = pool.stats() - before;
        if (record) {
          phase.writes = first;
          r.migrations_auto = first.allocations - (map->fresh_extensions() - fresh);
          finish_checks(r, *map, auto_entries_);
        }
      }
    }
    t.finish(phase);
    return first;
  }

  void reset(BenchReport& r) {
    Timings t;
    for (unsigned i = 0; i < c_.trials; ++i) {
      restore();
      RetentionPolicy policy;
      policy.model = RetentionModel::reset;
      policy.layout_name = name_;
      policy.layout_version = kUpdatedVersion;
      policy.capacity = pool_capacity(c_);
      auto t0 = Clock::now();
      RetentionResult opened = open_with_policy(work_, policy);
      ExtensionRuntime rt(opened.pool);
      auto map = make_kernel(c_.kernel, manual_variant(c_.layout), rt);
      WriteStats before = opened.pool.stats();
      apply(*map, opened.pool, workload_.update);
      t.samples.push_back(seconds_since(t0));
      if (i == 0) {
        r.reset.writes = opened.pool.stats() - before;
        if (c_.model == RetentionModel::reset) r.final_size = map->size();
      }
    }
    t.finish(r.reset);
  }

  /// Both update phases must leave the same content behind.
  void compare(BenchReport& r) const {
    if (manual_entries_ && auto_entries_ && *manual_entries_ != *auto_entries_) r.valid = false;
  }

  /// Cost of one checked translation, measured over the snapshot.
  double translation_cost() {
    restore();
    Pool pool = Pool::open(work_, name_);
    ExtensionRuntime rt(pool);
    ObjectId root = pool.root();
    constexpr int kRounds = 1 << 21;
    std::uintptr_t sink = 0;
    auto t0 = Clock::now();
    for (int i = 0; i < kRounds; ++i) sink += reinterpret_cast<std::uintptr_t>(rt.address(root));
    double t = seconds_since(t0);
    if (sink == 1) std::fputc(' ', stderr);
    return t / kRounds;
  }

  /// Cost of materializing one extension record, INIT included, timed over
  /// upgrading every record of the snapshot.
  double allocation_cost() {
    restore();
    RetentionPolicy policy;
    policy.model = RetentionModel::automatic;
    policy.layout_name = name_;
    policy.layout_version = kUpdatedVersion;
    policy.manifest = manifest_;
    RetentionResult opened = open_with_policy(work_, policy);
    Pool& pool = opened.pool;
    ExtensionRuntime rt(pool);
    auto map = make_kernel(c_.kernel, auto_variant(c_.layout), rt);
    WriteStats before = pool.stats();
    auto t0 = Clock::now();
    {
      Transaction tx(pool);
      map->materialize_all(tx);
      tx.commit();
    }
    double t = seconds_since(t0);
    std::uint64_t events = (pool.stats() - before).allocations;
    return events ? t / static_cast<double>(events) : 0.0;
  }

 private:
  void finish_checks(BenchReport& r, MapKernel& map, std::optional<std::vector<MapEntry>>& out) {
    try {
      map.validate();
    } catch (const Error&) {
      r.valid = false;
    }
    r.final_size = map.size();
    auto entries = map.entries();
    std::sort(entries.begin(), entries.end(),
              [](const MapEntry& a, const MapEntry& b) { return a.key < b.key; });
    out = std::move(entries);
  }

  static void discard(const std::filesystem::path& p) {
    if (std::filesystem::exists(p)) Pool::remove(p);
  }

  void restore() {
    discard(work_);
    std::filesystem::copy_file(snapshot_, work_);
  }

  const WorkloadConfig& c_;
  std::filesystem::path work_;
  std::filesystem::path snapshot_;
  std::string name_;
  Workload workload_;
  SchemaManifest manifest_;
  std::optional<std::vector<MapEntry>> manual_entries_;
  std::optional<std::vector<MapEntry>> auto_entries_;
};

void finish_overheads(BenchReport& r) {
  if (r.retain.ran && r.manual.ran && r.manual.seconds > 0)
    r.overhead_manual_pct = overhead_manual(r.retain.seconds, r.manual.seconds);
  if (r.automatic.ran && r.manual.ran && r.manual.seconds > 0)
    r.overhead_auto_pct = overhead_auto(r.automatic.seconds, r.manual.seconds);
}

}  // namespace

BenchReport run_experiment(const WorkloadConfig& config) {
  check_config(config);
  BenchReport r;
  r.config = config;
  Runner run(config);
  run.original(r);
  switch (config.model) {
    case RetentionModel::reset: run.reset(r); break;
    case RetentionModel::manual: run.manual(r, true); break;
    case RetentionModel::automatic:
      run.manual(r, true);
      run.automatic(r, r.automatic, AutoTweak::none, true);
      run.compare(r);
      break;
  }
  finish_overheads(r);
  return r;
}

std::vector<BenchReport> sweep_dataset_size(const WorkloadConfig& config,
                                            const std::vector<std::uint64_t>& sizes) {
  std::vector<BenchReport> out;
  for (std::uint64_t n : sizes) {
    WorkloadConfig c = config;
    c.n = n;
    out.push_back(run_experiment(c));
  }
  return out;
}

std::vector<BenchReport> sweep_working_set(const WorkloadConfig& config, const std::vector<double>& ratios) {
  std::vector<BenchReport> out;
  for (double ratio : ratios) {
    WorkloadConfig c = config;
    c.pattern = Pattern::del;
    c.working_set_ratio = ratio;
    out.push_back(run_experiment(c));
  }
  return out;
}

BenchReport breakdown_report(const WorkloadConfig& config) {
  WorkloadConfig c = config;
  c.model = RetentionModel::automatic;
  check_config(c);
  BenchReport r;
  r.config = c;
  Runner run(c);
  run.original(r);
  run.manual(r, true);
  WriteStats base = run.automatic(r, r.automatic, AutoTweak::none, true);
  run.compare(r);
  finish_overheads(r);

  struct Category {
    AutoTweak tweak;
    double saving = 0;
    bool timed = true;
  };
  Category cats[3] = {{AutoTweak::prematerialize}, {AutoTweak::fast_translation}, {AutoTweak::shallow}};
  double unit_alloc = -1, unit_translate = -1;
  for (Category& cat : cats) {
    PhaseResult variant;
    WriteStats w = run.automatic(r, variant, cat.tweak, false);
    double events = 0, unit = 0;
    switch (cat.tweak) {
      case AutoTweak::prematerialize:
        events = static_cast<double>(base.allocations) - static_cast<double>(w.allocations);
        if (unit_alloc < 0) unit_alloc = run.allocation_cost();
        unit = unit_alloc;
        break;
      case AutoTweak::fast_translation:
        events = static_cast<double>(base.translations) - static_cast<double>(w.translations);
        if (unit_translate < 0) unit_translate = run.translation_cost();
        unit = unit_translate;
        break;
      case AutoTweak::shallow:
        events = static_cast<double>(base.deep_copies) - static_cast<double>(w.deep_copies);
        if (unit_alloc < 0) unit_alloc = run.allocation_cost();
        unit = unit_alloc;
        break;
      case AutoTweak::none: break;
    }
    if (events <= 0) {
      cat.saving = 0;
      continue;
    }
    cat.saving = r.automatic.best - variant.best;
    if (cat.saving <= 0) {
      cat.saving = unit * events;
      cat.timed = false;
    }
  }
  double extra = r.automatic.seconds - r.manual.seconds;
  double named = cats[0].saving + cats[1].saving + cats[2].saving;
  double other = std::max(0.0, extra - named);
  double total = named + other;
  Breakdown b;
  if (total > 0) {
    b.alloc = cats[0].saving / total;
    b.translate = cats[1].saving / total;
    b.deepcopy = cats[2].saving / total;
    b.other = std::max(0.0, 1.0 - b.alloc - b.translate - b.deepcopy);
  } else {
    b.other = 1.0;
  }
  b.alloc_timed = cats[0].timed;
  b.translate_timed = cats[1].timed;
  b.deepcopy_timed = cats[2].timed;
  r.breakdown = b;
  return r;
}

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

json stats_json(const WriteStats& w) {
  return {{"user", w.bytes_user},       {"log", w.bytes_log},
          {"meta", w.bytes_meta},       {"flushes", w.flush_events},
          {"allocations", w.allocations}, {"translations", w.translations},
          {"deep_copies", w.deep_copies}, {"checks", w.checks},
          {"migration_bytes", w.migration_bytes}};
}

WriteStats stats_from(const json& j) {
  WriteStats w;
  w.bytes_user = j.value("user", 0ull);
  w.bytes_log = j.value("log", 0ull);
  w.bytes_meta = j.value("meta", 0ull);
  w.flush_events = j.value("flushes", 0ull);
  w.allocations = j.value("allocations", 0ull);
  w.translations = j.value("translations", 0ull);
  w.deep_copies = j.value("deep_copies", 0ull);
  w.checks = j.value("checks", 0ull);
  w.migration_bytes = j.value("migration_bytes", 0ull);
  return w;
}

json time_or_null(const PhaseResult& p) { return p.ran ? json(p.seconds) : json(nullptr); }

json pct_or_null(const std::optional<double>& v) { return v ? json(round2(*v)) : json(nullptr); }

const std::pair<const char*, PhaseResult BenchReport::*> kPhases[] = {
    {"original", &BenchReport::original}, {"retain", &BenchReport::retain},
    {"manual", &BenchReport::manual},     {"auto", &BenchReport::automatic},
    {"reset", &BenchReport::reset}};

json report_json(const BenchReport& r) {
  const WorkloadConfig& c = r.config;
  WriteStats bytes = r.model_bytes();
  json j = {
      {"kernel", leds::to_string(c.kernel)},
      {"pattern", to_string(c.pattern)},
      {"n", c.n},
      {"seed", c.seed},
      {"layout", leds::to_string(c.layout)},
      {"model", to_string(c.model)},
      {"trials", c.trials},
      {"ratio", c.working_set_ratio},
      {"cache_translations", c.cache_translations},
      {"shallow_copy", c.shallow_copy},
      {"t_original", time_or_null(r.original)},
      {"t_retain", time_or_null(r.retain)},
      {"t_manual", time_or_null(r.manual)},
      {"t_auto", time_or_null(r.automatic)},
      {"t_reset", time_or_null(r.reset)},
      {"overhead_manual_pct", pct_or_null(r.overhead_manual_pct)},
      {"overhead_auto_pct", pct_or_null(r.overhead_auto_pct)},
      {"bytes", {{"user", bytes.bytes_user}, {"log", bytes.bytes_log}, {"meta", bytes.bytes_meta}}},
      {"migrations", r.migrations()},
      {"migrations_manual", r.migrations_manual},
      {"migrations_auto", r.migrations_auto},
      {"manual_node_bytes", r.manual_node_bytes},
      {"final_size", r.final_size},
      {"valid", r.valid},
  };
  if (r.breakdown) {
    const Breakdown& b = *r.breakdown;
    j["breakdown"] = {{"alloc", b.alloc}, {"translate", b.translate}, {"deepcopy", b.deepcopy}, {"other", b.other}};
    j["breakdown_timed"] = {{"alloc", b.alloc_timed}, {"translate", b.translate_timed}, {"deepcopy", b.deepcopy_timed}};
  } else {
    j["breakdown"] = nullptr;
  }
  json phases = json::object();
  for (auto& [name, member] : kPhases) {
    const PhaseResult& p = r.*member;
    if (!p.ran) continue;
    phases[name] = {{"t", p.seconds}, {"stddev", p.stddev}, {"best", p.best}, {"stats", stats_json(p.writes)}};
  }
  j["phases"] = phases;
  return j;
}

BenchReport report_from(const json& j) {
  BenchReport r;
  WorkloadConfig& c = r.config;
  c.kernel = parse_kernel(j.at("kernel").get<std::string>());
  c.pattern = parse_pattern(j.at("pattern").get<std::string>());
  c.n = j.at("n").get<std::uint64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.layout = parse_layout_change(j.at("layout").get<std::string>());
  c.model = parse_model(j.at("model").get<std::string>());
  c.trials = j.at("trials").get<unsigned>();
  c.working_set_ratio = j.at("ratio").get<double>();
  c.cache_translations = j.value("cache_translations", false);
  c.shallow_copy = j.value("shallow_copy", false);
  auto pct = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  r.overhead_manual_pct = pct("overhead_manual_pct");
  r.overhead_auto_pct = pct("overhead_auto_pct");
  r.migrations_manual = j.value("migrations_manual", 0ull);
  r.migrations_auto = j.value("migrations_auto", 0ull);
  r.manual_node_bytes = j.value("manual_node_bytes", 0ull);
  r.final_size = j.value("final_size", 0ull);
  r.valid = j.value("valid", true);
  if (j.contains("breakdown") && !j["breakdown"].is_null()) {
    Breakdown b;
    const json& x = j["breakdown"];
    b.alloc = x.at("alloc").get<double>();
    b.translate = x.at("translate").get<double>();
    b.deepcopy = x.at("deepcopy").get<double>();
    b.other = x.at("other").get<double>();
    if (j.contains("breakdown_timed")) {
      const json& t = j["breakdown_timed"];
      b.alloc_timed = t.value("alloc", true);
      b.translate_timed = t.value("translate", true);
      b.deepcopy_timed = t.value("deepcopy", true);
    }
    r.breakdown = b;
  }
  if (j.contains("phases")) {
    for (auto& [name, member] : kPhases) {
      if (!j["phases"].contains(name)) continue;
      const json& p = j["phases"][name];
      PhaseResult& out = r.*member;
      out.ran = true;
      out.seconds = p.at("t").get<double>();
      out.stddev = p.value("stddev", 0.0);
      out.best = p.value("best", 0.0);
      out.writes = stats_from(p.at("stats"));
    }
  }
  return r;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string to_json(const std::vector<BenchReport>& reports) {
  json j;
  if (reports.size() == 1) {
    j = report_json(reports.front());
  } else {
    j = json::array();
    for (auto& r : reports) j.push_back(report_json(r));
  }
  return j.dump(2) + "\n";
}

std::vector<BenchReport> parse_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
    std::vector<BenchReport> out;
    if (j.is_array())
      for (auto& x : j) out.push_back(report_from(x));
    else
      out.push_back(report_from(j));
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("malformed report: ") + e.what());
  }
}

std::string to_csv(const std::vector<BenchReport>& reports) {
  std::ostringstream out;
  out << "kernel,pattern,n,seed,layout,model,trials,ratio,t_original,t_retain,t_manual,t_auto,t_reset,"
         "overhead_manual_pct,overhead_auto_pct,bytes_user,bytes_log,bytes_meta,migrations,"
         "migrations_manual,migrations_auto,manual_node_bytes,alloc,translate,deepcopy,other,final_size,valid\n";
  auto t = [](const PhaseResult& p) { return p.ran ? fixed(p.seconds, 6) : std::string(); };
  auto pct = [](const std::optional<double>& v) { return v ? fixed(*v, 2) : std::string(); };
  for (const BenchReport& r : reports) {
    const WorkloadConfig& c = r.config;
    WriteStats b = r.model_bytes();
    out << leds::to_string(c.kernel) << ',' << to_string(c.pattern) << ',' << c.n << ',' << c.seed << ','
        << leds::to_string(c.layout) << ',' << to_string(c.model) << ',' << c.trials << ','
        << fixed(c.working_set_ratio, 4) << ',' << t(r.original) << ',' << t(r.retain) << ',' << t(r.manual)
        << ',' << t(r.automatic) << ',' << t(r.reset) << ',' << pct(r.overhead_manual_pct) << ','
        << pct(r.overhead_auto_pct) << ',' << b.bytes_user << ',' << b.bytes_log << ',' << b.bytes_meta << ','
        << r.migrations() << ',' << r.migrations_manual << ',' << r.migrations_auto << ','
        << r.manual_node_bytes;
    if (r.breakdown)
      out << ',' << fixed(r.breakdown->alloc, 4) << ',' << fixed(r.breakdown->translate, 4) << ','
          << fixed(r.breakdown->deepcopy, 4) << ',' << fixed(r.breakdown->other, 4);
    else
      out << ",,,,";
    out << ',' << r.final_size << ',' << (r.valid ? "true" : "false") << '\n';
  }
  return out.str();
}

void emit_report(const std::vector<BenchReport>& reports, ReportFormat format,
                 const std::filesystem::path& path) {
  std::string text = format == ReportFormat::json ? to_json(reports) : to_csv(reports);
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  out << text;
  if (!out.flush()) throw Error(ErrorCode::io_error, "cannot write " + path.string());
}

}  // namespace leds::bench
