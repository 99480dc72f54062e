#pragma once

#include "d2s/sched/orchestrator.hpp"

namespace d2s_test {

/// The fixed 2M-sample benchmark: a drifting stream strong enough that a
/// stale sparse model falls behind, with lambda calibrated once for ~0.80
/// overall sparsity. Mirrors configs/benchmark.ini.
inline d2s::ExperimentConfig benchmark_config() {
  d2s::ExperimentConfig cfg;
  // model: defaults (16 dense -> [32,16]; 4x1000x16 tables; top [64,32,1])
  cfg.model.lr = 0.05;

  cfg.stream.seed = 42;
  cfg.stream.batch_size = 250;
  cfg.stream.label_noise = 0.1;

  cfg.drift.anchor_times = {0, 400000, 800000, 1200000, 1600000, 2000000};
  cfg.drift.drift_magnitude = 0.6;
  cfg.drift.popularity_drift = 0.1;
  cfg.drift.seed = 7;

  cfg.prune.algorithm = d2s::PruneConfig::Algo::kAux;
  cfg.prune.lambda = 0.0015;
  cfg.prune.aux_lr = 10.0;
  cfg.prune.target_sparsity = 0.8;

  cfg.d2s.delta = 50000;
  cfg.d2s.horizon = 2000000;
  cfg.d2s.r = 8;
  cfg.d2s.p = 2;

  cfg.eval.lookahead_window = 25000;
  return cfg;
}

/// Refresh plan used by the d2s variant in the benchmark comparisons: the
/// same initial deployment as fixed-mask plus one mid-stream refresh.
inline d2s::ExperimentConfig benchmark_d2s_config() {
  d2s::ExperimentConfig cfg = benchmark_config();
  cfg.d2s.refresh_times = {400000, 1000000};
  return cfg;
}

/// Low / mid / high penalty triple for the monotonicity checks.
inline constexpr double kLambdaLow = 0.00075;
inline constexpr double kLambdaMid = 0.0015;
inline constexpr double kLambdaHigh = 0.003;

}  // namespace d2s_test
