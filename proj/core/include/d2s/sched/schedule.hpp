#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "d2s/tensor.hpp"

namespace d2s {

/// Timing of the dense-to-sparse pipeline over the discretized timeline:
/// snapshots every delta samples; a sparse model refreshed every r periods,
/// pruned from the dense snapshot p periods ahead of its deployment.
struct D2SConfig {
  uint64_t delta = 50000;
  uint64_t horizon = 2000000;
  int r = 8;  // serving periods per sparse refresh
  int p = 2;  // lead periods: prune source precedes deployment by p * delta
  // Explicit deployment times (multiples of delta, >= p * delta). When
  // empty, deployments follow the k * r * delta grid.
  std::vector<uint64_t> refresh_times;
  // >= 0 switches the orchestrator to divergence-triggered refreshes.
  double monitor_threshold = -1.0;
  // Share of each prune window spent learning the mask; the rest fine-tunes
  // under the frozen mask.
  double prune_phase_fraction = 0.5;

  void validate() const;
};

enum class JobKind { kDenseIncr, kSparseIncr, kPruneFinetune };

std::string to_string(JobKind k);

/// One unit of work: start from the snapshot at source_time, consume the
/// data window once, emit a snapshot at output_time. Lineage 0 is the dense
/// model; lineage k >= 1 is the k-th sparse generation.
struct Job {
  JobKind kind;
  uint64_t source_time;
  uint64_t window_begin;
  uint64_t window_end;
  uint64_t output_time;
  int lineage;
};

struct JobLog {
  std::vector<Job> jobs;
};

/// Builds the full job skeleton: dense-incr at every delta boundary across
/// the horizon; for deployment k at time D_k, a prune+fine-tune job sourced
/// from the dense snapshot at D_k - p*delta over the window [D_k - p*delta,
/// D_k), and sparse-incr jobs at each boundary of its serving span.
JobLog d2s_schedule(const D2SConfig& cfg);

/// Deployment times implied by the config (grid or explicit list).
std::vector<uint64_t> deployment_times(const D2SConfig& cfg);

/// Debounced refresh decision: fires once the relative CE has exceeded the
/// threshold for two consecutive observations.
class DivergenceMonitor {
 public:
  explicit DivergenceMonitor(double threshold) : threshold_(threshold) {}
  bool observe(double relative_ce) {
    consecutive_ = relative_ce > threshold_ ? consecutive_ + 1 : 0;
    return consecutive_ >= 2;
  }
  void reset() { consecutive_ = 0; }

 private:
  double threshold_;
  int consecutive_ = 0;
};

/// Batch form over aligned window series; element i is the decision after
/// observing window i. Throws on length mismatch.
std::vector<bool> divergence_monitor(const Vector& dense_ce,
                                     const Vector& sparse_ce,
                                     double threshold);

}  // namespace d2s
