#include "d2s/io/metrics_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace d2s {

using nlohmann::json;

void write_metrics_jsonl(const std::vector<MetricsRecord>& records,
                         std::ostream& os) {
  for (const auto& r : records) {
    json j;
    j["t"] = r.virtual_time;
    j["variant"] = r.variant;
    j["seed"] = r.seed;
    j["lineage"] = r.lineage;
    j["lookahead_ce"] = r.lookahead_ce;
    j["relative_ce"] = r.relative_ce;
    j["sparsity"] = r.overall_sparsity;
    j["layer_sparsity"] = r.layer_sparsity;
    j["mask_flips"] = r.mask_flips;
    os << j.dump() << "\n";
  }
}

std::vector<MetricsRecord> read_metrics_jsonl(std::istream& is) {
  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    MetricsRecord r;
    r.virtual_time = j.at("t").get<uint64_t>();
    r.variant = j.at("variant").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    r.lineage = j.at("lineage").get<std::string>();
    r.lookahead_ce = j.at("lookahead_ce").get<double>();
    r.relative_ce = j.at("relative_ce").get<double>();
    r.overall_sparsity = j.at("sparsity").get<double>();
    r.layer_sparsity = j.at("layer_sparsity").get<std::vector<double>>();
    r.mask_flips = j.at("mask_flips").get<uint64_t>();
    out.push_back(std::move(r));
  }
  return out;
}

namespace {
std::string fmt(double v) {
  return json(v).dump();  // shortest round-trip representation
}
}  // namespace

void write_metrics_csv(const std::vector<MetricsRecord>& records,
                       std::ostream& os) {
  os << "t,variant,seed,lineage,lookahead_ce,relative_ce,sparsity,"
        "layer_sparsity,mask_flips\n";
  for (const auto& r : records) {
    os << r.virtual_time << ',' << r.variant << ',' << r.seed << ','
       << r.lineage << ',' << fmt(r.lookahead_ce) << ',' << fmt(r.relative_ce)
       << ',' << fmt(r.overall_sparsity) << ',';
    for (size_t i = 0; i < r.layer_sparsity.size(); ++i) {
      if (i) os << ';';
      os << fmt(r.layer_sparsity[i]);
    }
    os << ',' << r.mask_flips << "\n";
  }
}

std::vector<MetricsRecord> read_metrics_csv(std::istream& is) {
  std::vector<MetricsRecord> out;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9)
      throw std::runtime_error("data error: malformed metrics CSV row");
    MetricsRecord r;
    r.virtual_time = std::stoull(cells[0]);
    r.variant = cells[1];
    r.seed = std::stoull(cells[2]);
    r.lineage = cells[3];
    r.lookahead_ce = std::stod(cells[4]);
    r.relative_ce = std::stod(cells[5]);
    r.overall_sparsity = std::stod(cells[6]);
    if (!cells[7].empty()) {
      std::stringstream ls(cells[7]);
      std::string item;
      while (std::getline(ls, item, ';'))
        r.layer_sparsity.push_back(std::stod(item));
    }
    r.mask_flips = std::stoull(cells[8]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_metrics_file(const std::vector<MetricsRecord>& records,
                        const std::string& path, const std::string& format) {
  std::ofstream os(path, std::ios::binary);  // binary: keep \n stable
  if (!os) throw std::runtime_error("I/O error: cannot open " + path);
  if (format == "jsonl")
    write_metrics_jsonl(records, os);
  else if (format == "csv")
    write_metrics_csv(records, os);
  else
    throw std::invalid_argument("usage error: unknown format '" + format +
                                "' (expected jsonl or csv)");
  if (!os) throw std::runtime_error("I/O error: write failed for " + path);
}

std::vector<MetricsRecord> read_metrics_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::runtime_error("I/O error: missing metrics file " + path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
    return read_metrics_csv(is);
  return read_metrics_jsonl(is);
}

}  // namespace d2s
