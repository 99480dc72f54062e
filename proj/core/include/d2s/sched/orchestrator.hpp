#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "d2s/metrics/metrics.hpp"
#include "d2s/nn/model.hpp"
#include "d2s/prune/pruning.hpp"
#include "d2s/sched/schedule.hpp"
#include "d2s/stream/stream.hpp"

namespace d2s {

/// Experiment variants. dense-only keeps no sparse model; fixed-mask prunes
/// once and freezes the pattern; aux-adapt keeps updating mask and weights
/// together; mop-adapt rebuilds the mask from momentum scores every
/// refresh_interval samples; d2s refreshes the sparse model from the dense
/// lineage on the configured cadence.
enum class Variant { kDenseOnly, kFixedMask, kAuxAdapt, kMopAdapt, kD2s };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);
const std::vector<std::string>& variant_names();

struct EvalConfig {
  uint64_t lookahead_window = 25000;
  double post_horizon_fraction = 0.1;  // held-out slice right after the end
  void validate() const;
};

struct ExperimentConfig {
  ModelConfig model;
  StreamConfig stream;
  DriftSchedule drift;
  PruneConfig prune;
  D2SConfig d2s;
  EvalConfig eval;

  /// Validates every section and the cross-module shape constraints.
  void validate() const;
};

/// Write-once snapshot map keyed by (lineage tag, virtual time).
class SnapshotStore {
 public:
  void put(const std::string& lineage, uint64_t time, RecModel snapshot);
  const RecModel& get(const std::string& lineage, uint64_t time) const;
  bool contains(const std::string& lineage, uint64_t time) const;
  size_t size() const { return snaps_.size(); }

 private:
  std::map<std::pair<std::string, uint64_t>, RecModel> snaps_;
};

/// Per-lineage single-pass bookkeeping: windows must stay disjoint and
/// ordered; total counts every sample the lineage has consumed.
struct LineageTracker {
  uint64_t consumed_through = 0;
  uint64_t total = 0;
};

/// One incremental step: a single pass over [begin, end) in stream order.
/// Requires model.virtual_time == begin and no overlap with data already
/// consumed by this lineage; advances the timestamp to end.
void incremental_step(RecModel& model, const StreamGenerator& stream,
                      uint64_t begin, uint64_t end, ForwardCache& cache,
                      LineageTracker& lineage);

/// Prune + fine-tune job: masked clone of source, mask learning over the
/// first phase_fraction of the window, fixed-mask fine-tuning on the rest.
/// The ramp span for ranked criteria equals the mask-learning span.
RecModel run_prune_job(const RecModel& source, const StreamGenerator& stream,
                       uint64_t begin, uint64_t end, const PruneConfig& pcfg,
                       double phase_fraction);

struct ExperimentSummary {
  double last_window_relative_ce = 0.0;
  double post_eval_ce_dense = 0.0;
  double post_eval_ce_sparse = 0.0;
  double post_eval_relative_ce = 0.0;
  double achieved_sparsity = 0.0;
  uint64_t deployments = 0;
};

struct ExperimentResult {
  std::vector<MetricsRecord> records;
  JobLog joblog;  // jobs actually executed, in launch order
  RecModel final_dense;
  std::optional<RecModel> final_sparse;
  ExperimentSummary summary;
};

/// Sequential virtual-time simulation of one run. Bit-reproducible for a
/// given (config, variant, seed); the dense lineage never depends on any
/// sparse job.
ExperimentResult run_experiment(const ExperimentConfig& cfg, Variant variant,
                                uint64_t seed);

}  // namespace d2s
