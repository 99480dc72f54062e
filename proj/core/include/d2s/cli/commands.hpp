#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "d2s/sparse/bench.hpp"

namespace d2s {

/// Library-level command entry points; the binary in tools/ is a thin
/// argument parser over these, so every CLI behavior is reachable in-process.

struct RunOptions {
  std::string config_path;
  std::string variant = "dense-only";
  std::vector<uint64_t> seeds = {1};
  std::string out_dir = "out";
  std::string format = "jsonl";
  int threads = 0;  // 0: one thread per seed, capped at the hardware count
};
int cmd_run(const RunOptions& opt);

struct CompareOptions {
  std::vector<std::string> manifest_paths;
  std::string out_dir = "compare";
};
int cmd_compare(const CompareOptions& opt);

struct BenchOptions {
  BenchConfig bench;
  std::string out_path;  // optional CSV; the table always prints
};
int cmd_bench(const BenchOptions& opt);

struct GenStreamOptions {
  std::string config_path;
  uint64_t t0 = 0;
  uint64_t count = 0;
  std::string out_path;
};
int cmd_gen_stream(const GenStreamOptions& opt);

struct InspectOptions {
  std::string snapshot_path;
  std::string dump_mask_path;   // optional: write the mask bitset file
  std::string histogram_path;   // optional: write per-layer |theta| histograms
};
int cmd_inspect_snapshot(const InspectOptions& opt);

}  // namespace d2s
