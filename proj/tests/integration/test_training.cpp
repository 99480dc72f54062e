#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "d2s/metrics/metrics.hpp"
#include "d2s/rng.hpp"
#include "d2s/sched/orchestrator.hpp"
#include "support/benchmark_config.hpp"
#include "support/test_util.hpp"

using namespace d2s;
using namespace d2s_test;

namespace {

// assembles a batch from arbitrary sample indices (one generator fetch per
// example; fine at test scale)
Batch gather(const StreamGenerator& stream, const std::vector<uint64_t>& idx,
             size_t begin, size_t count) {
  const int n_tables = static_cast<int>(stream.config().table_rows.size());
  Batch out;
  out.dense.resize(static_cast<int>(count), stream.config().dense_dim);
  out.labels.resize(count);
  out.ids.resize(static_cast<size_t>(n_tables));
  out.offsets.assign(static_cast<size_t>(n_tables),
                     std::vector<uint32_t>(count + 1, 0));
  out.virtual_time = idx[begin];
  for (size_t i = 0; i < count; ++i) {
    const Batch one = stream.batch(idx[begin + i], 1);
    for (int d = 0; d < one.dense.cols; ++d)
      out.dense.at(static_cast<int>(i), d) = one.dense.at(0, d);
    out.labels[i] = one.labels[0];
    for (int f = 0; f < n_tables; ++f) {
      for (uint32_t id : one.ids[f]) out.ids[f].push_back(id);
      out.offsets[f][i + 1] = static_cast<uint32_t>(out.ids[f].size());
    }
  }
  return out;
}

}  // namespace

TEST_CASE("stationary stream: incremental training matches offline shuffled "
          "training") {
  ExperimentConfig cfg = benchmark_config();
  cfg.drift.drift_magnitude = 0.0;
  cfg.drift.popularity_drift = 0.0;
  const StreamGenerator stream(cfg.stream, cfg.drift);

  const uint64_t n_train = 300000;
  const int bsz = cfg.stream.batch_size;

  RecModel incremental = build_model(cfg.model, 77);
  ForwardCache cache;
  LineageTracker lin;
  incremental_step(incremental, stream, 0, n_train, cache, lin);

  RecModel offline = build_model(cfg.model, 77);
  std::vector<uint64_t> order(n_train);
  std::iota(order.begin(), order.end(), uint64_t{0});
  Rng shuffle_rng(123);
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
  for (size_t at = 0; at < order.size(); at += static_cast<size_t>(bsz)) {
    const size_t count =
        std::min<size_t>(static_cast<size_t>(bsz), order.size() - at);
    train_step(offline, gather(stream, order, at, count), cache);
  }
  offline.virtual_time = n_train;

  const double ce_incremental =
      lookahead_window_ce(incremental, stream, n_train, 25000);
  const double ce_offline =
      lookahead_window_ce(offline, stream, n_train, 25000);
  CAPTURE(ce_incremental);
  CAPTURE(ce_offline);
  CHECK(std::abs(ce_incremental / ce_offline - 1.0) < 0.02);
}

TEST_CASE("benchmark drift is strong enough to hurt a frozen model") {
  const ExperimentConfig cfg = benchmark_config();
  const StreamGenerator stream(cfg.stream, cfg.drift);

  RecModel model = build_model(cfg.model, 31);
  ForwardCache cache;
  LineageTracker lin;
  incremental_step(model, stream, 0, 400000, cache, lin);

  const double at_freeze = lookahead_window_ce(model, stream, 400000, 25000);
  const double at_end =
      lookahead_window_ce(model, stream, cfg.d2s.horizon, 25000);
  CAPTURE(at_freeze);
  CAPTURE(at_end);
  CHECK(at_end / at_freeze - 1.0 >= 0.05);
}

TEST_CASE("dense training keeps beating the background rate") {
  const ExperimentConfig cfg = benchmark_config();
  const StreamGenerator stream(cfg.stream, cfg.drift);
  RecModel model = build_model(cfg.model, 5);
  ForwardCache cache;
  LineageTracker lin;
  incremental_step(model, stream, 0, 400000, cache, lin);

  const double ce = lookahead_window_ce(model, stream, 400000, 25000);
  const double q = label_prevalence(stream, 400000, 25000);
  // the trained model must clearly beat a constant background predictor
  CHECK(normalized_ce(ce, q) < 0.95);
}

TEST_CASE("aux pruning phase lands near the benchmark's target sparsity") {
  const ExperimentConfig cfg = benchmark_config();
  const StreamGenerator stream(cfg.stream, cfg.drift);
  RecModel dense = build_model(cfg.model, 9);
  ForwardCache cache;
  LineageTracker lin;
  incremental_step(dense, stream, 0, 300000, cache, lin);
  const RecModel sparse = run_prune_job(dense, stream, 300000, 400000,
                                        cfg.prune, cfg.d2s.prune_phase_fraction);
  const double sp = sparsity(sparse);
  CAPTURE(sp);
  CHECK(sp > 0.72);
  CHECK(sp < 0.88);
  // layer-wise sparsity is learned, not imposed: the pattern is non-uniform
  const auto per_layer = per_layer_sparsity(sparse);
  const auto [lo, hi] = std::minmax_element(per_layer.begin(), per_layer.end());
  CHECK(*hi - *lo > 0.1);
}
