#include "d2s/io/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace d2s {

using nlohmann::json;

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void save_manifest(const RunManifest& m, const std::string& path) {
  json j;
  j["config_text"] = m.config_text;
  j["config_hash"] = m.config_hash;
  j["stream_hash"] = m.stream_hash;
  j["variant"] = m.variant;
  j["seeds"] = m.seeds;
  j["format"] = m.format;
  j["metrics_files"] = m.metrics_files;
  j["snapshot_files"] = m.snapshot_files;
  j["joblog_file"] = m.joblog_file;
  j["status"] = m.status;
  j["last_window_relative_ce"] = m.last_window_relative_ce;
  j["post_eval_relative_ce"] = m.post_eval_relative_ce;
  j["achieved_sparsity"] = m.achieved_sparsity;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("I/O error: cannot open " + path);
  os << j.dump(2) << "\n";
  if (!os) throw std::runtime_error("I/O error: write failed for " + path);
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("I/O error: missing manifest " + path);
  json j;
  is >> j;
  RunManifest m;
  m.config_text = j.at("config_text").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.stream_hash = j.at("stream_hash").get<std::string>();
  m.variant = j.at("variant").get<std::string>();
  m.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  m.format = j.at("format").get<std::string>();
  m.metrics_files = j.at("metrics_files").get<std::vector<std::string>>();
  m.snapshot_files = j.at("snapshot_files").get<std::vector<std::string>>();
  m.joblog_file = j.at("joblog_file").get<std::string>();
  m.status = j.at("status").get<std::vector<std::string>>();
  m.last_window_relative_ce =
      j.at("last_window_relative_ce").get<std::vector<double>>();
  m.post_eval_relative_ce =
      j.at("post_eval_relative_ce").get<std::vector<double>>();
  m.achieved_sparsity = j.at("achieved_sparsity").get<std::vector<double>>();
  return m;
}

}  // namespace d2s
