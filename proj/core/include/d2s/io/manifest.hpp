#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace d2s {

/// Per-run audit record. Every output file of a run is referenced by
/// exactly one manifest; paths are relative to the manifest's directory.
struct RunManifest {
  std::string config_text;  // canonical config echo
  std::string config_hash;  // fnv1a-64 of the echo, hex
  std::string stream_hash;  // hash of the [stream]+[drift] sections only
  std::string variant;
  std::vector<uint64_t> seeds;
  std::string format;  // jsonl or csv
  std::vector<std::string> metrics_files;   // one per seed
  std::vector<std::string> snapshot_files;  // final sparse model per seed
  std::string joblog_file;
  std::vector<std::string> status;  // one per seed
  std::vector<double> last_window_relative_ce;
  std::vector<double> post_eval_relative_ce;
  std::vector<double> achieved_sparsity;
};

void save_manifest(const RunManifest& m, const std::string& path);
RunManifest load_manifest(const std::string& path);

uint64_t fnv1a64(std::string_view s);
std::string hex64(uint64_t v);

}  // namespace d2s
