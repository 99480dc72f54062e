#include "d2s/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "d2s/nn/loss.hpp"
#include "d2s/prune/pruning.hpp"

namespace d2s {

double lookahead_window_ce(const RecModel& model, const StreamGenerator& stream,
                           uint64_t t, uint64_t window) {
  if (window == 0)
    throw std::runtime_error("data error: evaluation window must be > 0");
  if (t < model.virtual_time)
    throw std::runtime_error(
        "protocol error: look-ahead window overlaps data this lineage "
        "already consumed");
  const uint64_t batch = static_cast<uint64_t>(stream.config().batch_size);
  ForwardCache cache;
  double sum = 0.0;
  for (uint64_t s = t; s < t + window; s += batch) {
    const int n = static_cast<int>(std::min(batch, t + window - s));
    const Batch b = stream.batch(s, n);
    forward(model, b, cache);
    sum += ce_sum(cache.probs, b.labels);
  }
  return sum / static_cast<double>(window);
}

double relative_ce(double ce_pruned, double ce_full) {
  if (!(ce_full > 0.0))
    throw std::runtime_error(
        "data error: relative CE needs a positive full-model CE");
  return ce_pruned / ce_full - 1.0;
}

double normalized_ce(double ce, double label_prevalence) {
  if (!(label_prevalence > 0.0 && label_prevalence < 1.0))
    throw std::runtime_error(
        "data error: label prevalence must be strictly inside (0, 1)");
  const double q = label_prevalence;
  const double entropy = -q * std::log(q) - (1.0 - q) * std::log(1.0 - q);
  return ce / entropy;
}

HistogramReport histogram_report(const RecModel& model) {
  HistogramReport report;
  for_each_masked(model, [&](const MaskedLayer& l) {
    HistogramReport::LayerHist h;
    for (double x : l.theta.v) h.max_abs = std::max(h.max_abs, std::abs(x));
    const double scale =
        h.max_abs > 0.0 ? HistogramReport::kBins / h.max_abs : 0.0;
    for (size_t i = 0; i < l.theta.size(); ++i) {
      int b = static_cast<int>(std::abs(l.theta.v[i]) * scale);
      b = std::min(b, HistogramReport::kBins - 1);
      if (l.aux.v[i] > 0.0)
        ++h.active[static_cast<size_t>(b)];
      else
        ++h.pruned[static_cast<size_t>(b)];
    }
    report.layers.push_back(h);
  });
  return report;
}

std::vector<SparsityRow> sparsity_vs_structure_report(const RecModel& model) {
  std::vector<SparsityRow> rows;
  int depth = 0;
  for_each_masked(model, [&](const MaskedLayer& l) {
    rows.push_back({depth++, static_cast<int64_t>(l.theta.size()),
                    sparsity(l)});
  });
  return rows;
}

double label_prevalence(const StreamGenerator& stream, uint64_t t,
                        uint64_t count) {
  if (count == 0)
    throw std::runtime_error("data error: prevalence needs a nonempty slice");
  const uint64_t batch = static_cast<uint64_t>(stream.config().batch_size);
  double ones = 0.0;
  for (uint64_t s = t; s < t + count; s += batch) {
    const int n = static_cast<int>(std::min(batch, t + count - s));
    const Batch b = stream.batch(s, n);
    for (double y : b.labels) ones += y;
  }
  return ones / static_cast<double>(count);
}

}  // namespace d2s
