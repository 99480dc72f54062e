#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "d2s/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dense-to-sparse pruning lab for online recommendation models"};
  app.require_subcommand(1);

  d2s::RunOptions run_opt;
  auto* run = app.add_subcommand(
      "run", "Train one experiment variant and write metrics + manifest");
  run->add_option("--config", run_opt.config_path, "Experiment config file")
      ->required();
  run->add_option("--variant", run_opt.variant,
                  "dense-only | fixed-mask | aux-adapt | mop-adapt | d2s")
      ->required();
  run->add_option("--seeds", run_opt.seeds, "Seed list")->delimiter(',');
  run->add_option("--out", run_opt.out_dir, "Output directory");
  run->add_option("--format", run_opt.format, "jsonl or csv");
  run->add_option("--threads", run_opt.threads,
                  "Worker threads across seeds (0 = auto)");

  d2s::CompareOptions cmp_opt;
  auto* cmp = app.add_subcommand(
      "compare", "Aggregate runs into tables and charts");
  cmp->add_option("manifests", cmp_opt.manifest_paths, "Run manifest files")
      ->required();
  cmp->add_option("--out", cmp_opt.out_dir, "Output directory");

  d2s::BenchOptions bench_opt;
  auto* bench = app.add_subcommand(
      "bench", "Dense vs CSR matvec micro-benchmark");
  bench->add_option("--sizes", bench_opt.bench.sizes, "Square matrix sizes")
      ->delimiter(',');
  bench->add_option("--sparsities", bench_opt.bench.sparsities,
                    "Sparsity levels")
      ->delimiter(',');
  bench->add_option("--reps", bench_opt.bench.repetitions,
                    "Timed repetitions (median reported)");
  bench->add_option("--out", bench_opt.out_path, "Optional CSV output");

  d2s::GenStreamOptions gen_opt;
  auto* gen = app.add_subcommand(
      "gen-stream", "Export a stream slice to a record file");
  gen->add_option("--config", gen_opt.config_path, "Experiment config file")
      ->required();
  gen->add_option("--t0", gen_opt.t0, "First sample index");
  gen->add_option("--count", gen_opt.count, "Number of samples")->required();
  gen->add_option("--out", gen_opt.out_path, "Output file")->required();

  d2s::InspectOptions ins_opt;
  auto* ins = app.add_subcommand(
      "inspect-snapshot", "Summarize a model snapshot file");
  ins->add_option("snapshot", ins_opt.snapshot_path, "Snapshot file")
      ->required();
  ins->add_option("--dump-mask", ins_opt.dump_mask_path,
                  "Write the mask bitset to this file");
  ins->add_option("--histogram", ins_opt.histogram_path,
                  "Write per-layer weight histograms (CSV)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return d2s::cmd_run(run_opt);
    if (*cmp) return d2s::cmd_compare(cmp_opt);
    if (*bench) return d2s::cmd_bench(bench_opt);
    if (*gen) return d2s::cmd_gen_stream(gen_opt);
    if (*ins) return d2s::cmd_inspect_snapshot(ins_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
