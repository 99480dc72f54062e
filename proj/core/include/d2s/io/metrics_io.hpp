#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "d2s/metrics/metrics.hpp"

namespace d2s {

/// One self-describing JSON object per line, keys sorted, numbers emitted
/// with round-trip precision. The canonical on-disk metrics format.
void write_metrics_jsonl(const std::vector<MetricsRecord>& records,
                         std::ostream& os);
std::vector<MetricsRecord> read_metrics_jsonl(std::istream& is);

/// CSV alternative; layer sparsities join with ';' inside one cell.
void write_metrics_csv(const std::vector<MetricsRecord>& records,
                       std::ostream& os);
std::vector<MetricsRecord> read_metrics_csv(std::istream& is);

void write_metrics_file(const std::vector<MetricsRecord>& records,
                        const std::string& path, const std::string& format);
std::vector<MetricsRecord> read_metrics_file(const std::string& path);

}  // namespace d2s
