#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "d2s/nn/model.hpp"
#include "d2s/stream/stream.hpp"

namespace d2s {

/// One evaluation point of a run. Dense-lineage rows carry relative_ce 0.
struct MetricsRecord {
  uint64_t virtual_time = 0;
  std::string variant;
  uint64_t seed = 0;
  std::string lineage;  // "dense" or "sparse"
  double lookahead_ce = 0.0;
  double relative_ce = 0.0;
  double overall_sparsity = 0.0;
  std::vector<double> layer_sparsity;
  uint64_t mask_flips = 0;  // mask bits changed since the previous record
};

/// Mean CE of the frozen model over the not-yet-consumed window [t, t + w).
/// Throws a protocol error when the window reaches into data the model has
/// already trained on (t < model.virtual_time).
double lookahead_window_ce(const RecModel& model, const StreamGenerator& stream,
                           uint64_t t, uint64_t window);

/// ce_pruned / ce_full - 1. Throws unless ce_full > 0.
double relative_ce(double ce_pruned, double ce_full);

/// ce / entropy(prevalence) with the natural-log binary entropy; the CE a
/// constant background-rate predictor would score is exactly 1.0.
double normalized_ce(double ce, double label_prevalence);

/// Per-layer |theta| histograms split by mask state, shared binning.
struct HistogramReport {
  static constexpr int kBins = 64;
  struct LayerHist {
    double max_abs = 0.0;  // bin b covers [b, b+1) * max_abs / kBins
    std::array<uint64_t, kBins> pruned{};
    std::array<uint64_t, kBins> active{};
  };
  std::vector<LayerHist> layers;
};

HistogramReport histogram_report(const RecModel& model);

/// One row per maskable layer, in model order.
struct SparsityRow {
  int depth = 0;       // 0-based position among maskable layers
  int64_t size = 0;    // weight count
  double sparsity = 0.0;
};

std::vector<SparsityRow> sparsity_vs_structure_report(const RecModel& model);

/// Empirical label prevalence of a stream slice.
double label_prevalence(const StreamGenerator& stream, uint64_t t,
                        uint64_t count);

}  // namespace d2s
