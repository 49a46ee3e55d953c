// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

// ledsbench: runs the retention experiments and writes JSON or CSV reports.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "leds/bench.hpp"
#include "leds/error.hpp"

namespace {

using namespace leds;
using namespace leds::bench;

struct Options {
  std::string kernel = "hashmap";
  std::string pattern = "del";
  std::uint64_t n = 1000;
  std::uint64_t seed = 1;
  std::string layout = "change";
  std::string model = "auto";
  unsigned trials = 5;
  std::string pool = "ledsbench.pool";
  std::string report = "json";
  std::string out = "-";
  double ratio = 1.0;
  bool cache = false;
  bool shallow = false;
  std::uint64_t capacity = 0;
  std::string manifest;
};

void add_workload_options(CLI::App* app, Options& o) {
  app->add_option("--kernel", o.kernel, "Map kernel")
      ->check(CLI::IsMember({"skiplist", "ctree", "btree", "rbtree", "hashmap"}))
      ->capture_default_str();
  app->add_option("--pattern", o.pattern, "Input pattern")
      ->check(CLI::IsMember({"del", "ins", "rand"}))
      ->capture_default_str();
  app->add_option("--n", o.n, "Keys per phase")->capture_default_str();
  app->add_option("--seed", o.seed, "Workload seed")->capture_default_str();
  app->add_option("--layout", o.layout, "Layout change")
      ->check(CLI::IsMember({"change", "add"}))
      ->capture_default_str();
  app->add_option("--model", o.model, "Retention model")
      ->check(CLI::IsMember({"reset", "manual", "auto"}))
      ->capture_default_str();
  app->add_option("--trials", o.trials, "Repetitions per phase")->capture_default_str();
  app->add_option("--pool", o.pool, "Scratch pool file")->capture_default_str();
  app->add_option("--report", o.report, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app->add_option("--out", o.out, "Report path, - for stdout")->capture_default_str();
  app->add_option("--ratio", o.ratio, "Fraction of keys the DEL update phase deletes")->capture_default_str();
  app->add_flag("--cache-translations", o.cache, "Cache translations inside a transaction");
  app->add_flag("--shallow-copy", o.shallow, "Share extension chains on record copies");
  app->add_option("--capacity", o.capacity, "Pool capacity in bytes, 0 sizes it from n");
  app->add_option("--manifest", o.manifest, "Schema manifest for the automatic model");
}

WorkloadConfig to_config(const Options& o) {
  WorkloadConfig c;
  c.kernel = parse_kernel(o.kernel);
  c.pattern = parse_pattern(o.pattern);
  c.n = o.n;
  c.seed = o.seed;
  c.layout = parse_layout_change(o.layout);
  c.model = parse_model(o.model);
  c.trials = o.trials;
  c.pool = o.pool;
  c.working_set_ratio = o.ratio;
  c.cache_translations = o.cache;
  c.shallow_copy = o.shallow;
  c.capacity = o.capacity;
  if (!o.manifest.empty()) c.manifest = o.manifest;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retention-model benchmark for persistent map kernels"};
  app.set_config("--config", "", "TOML/INI file with option values (sections per subcommand)");
  app.require_subcommand(1);

  Options run_opts;
  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  add_workload_options(run, run_opts);

  Options sweep_opts;
  std::string sweep_kind;
  std::vector<std::uint64_t> sizes = {100, 1000, 10000, 100000};
  std::vector<double> ratios = {0.001, 0.01, 0.1, 1.0};
  CLI::App* sweep = app.add_subcommand("sweep", "Run a series: size, ratio or breakdown");
  sweep->add_option("kind", sweep_kind, "size | ratio | breakdown")
      ->required()
      ->check(CLI::IsMember({"size", "ratio", "breakdown"}));
  add_workload_options(sweep, sweep_opts);
  sweep->add_option("--sizes", sizes, "Dataset sizes for the size sweep")->capture_default_str();
  sweep->add_option("--ratios", ratios, "Working-set ratios for the ratio sweep")->capture_default_str();

  std::string schema_kernel = "hashmap", schema_layout = "change", schema_out = "-";
  bool schema_original = false;
  CLI::App* schema = app.add_subcommand("schema", "Write the schema manifest of a kernel's records");
  schema->add_option("--kernel", schema_kernel)
      ->check(CLI::IsMember({"skiplist", "ctree", "btree", "rbtree", "hashmap"}))
      ->capture_default_str();
  schema->add_option("--layout", schema_layout)->check(CLI::IsMember({"change", "add"}))->capture_default_str();
  schema->add_flag("--original", schema_original, "Write the V1 schema instead");
  schema->add_option("--out", schema_out, "Manifest path, - for stdout")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      WorkloadConfig c = to_config(run_opts);
      emit_report({run_experiment(c)}, parse_format(run_opts.report), run_opts.out);
    } else if (*sweep) {
      WorkloadConfig c = to_config(sweep_opts);
      std::vector<BenchReport> reports;
      if (sweep_kind == "size")
        reports = sweep_dataset_size(c, sizes);
      else if (sweep_kind == "ratio")
        reports = sweep_working_set(c, ratios);
      else
        reports = {breakdown_report(c)};
      emit_report(reports, parse_format(sweep_opts.report), sweep_opts.out);
    } else if (*schema) {
      KernelKind kind = parse_kernel(schema_kernel);
      SchemaManifest m = schema_original ? original_schema(kind)
                                         : make_auto_schema(kind, parse_layout_change(schema_layout));
      if (schema_out == "-")
        std::cout << m.to_json() << "\n";
      else
        m.save(schema_out);
    }
  } catch (const Error& e) {
    std::cerr << "ledsbench: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
