#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "d2s/nn/model.hpp"
#include "d2s/tensor.hpp"

namespace d2s {

/// Shape of the synthetic click stream and of the hidden teacher network
/// that labels it. Feature dimensions must line up with the student model.
struct StreamConfig {
  int dense_dim = 16;
  std::vector<int> table_rows = {1000, 1000, 1000, 1000};
  std::vector<int> multiplicity = {1, 3, 1, 3};  // ids drawn per feature
  double zipf_exponent = 1.05;
  double label_noise = 0.1;
  int batch_size = 250;
  uint64_t seed = 42;

  // teacher topology (same family as the student, smaller)
  int teacher_embedding_dim = 8;
  std::vector<int> teacher_bottom = {8};
  std::vector<int> teacher_top = {16, 1};
  double teacher_gain = 3.0;  // scales the init so labels are informative

  void validate() const;
};

/// Non-stationarity knobs: teacher parameters walk between anchor points
/// and the popularity order of categorical ids reshuffles alongside.
struct DriftSchedule {
  std::vector<uint64_t> anchor_times = {0,      400000,  800000,
                                        1200000, 1600000, 2000000};
  double drift_magnitude = 0.6;    // relative L2 step between anchors
  double popularity_drift = 0.25;  // fraction of ranks reshuffled per hop
  uint64_t seed = 7;

  void validate() const;
};

/// One anchor's worth of teacher parameters.
struct TeacherParams {
  std::vector<Matrix> bottom_w;
  std::vector<Vector> bottom_b;
  std::vector<Matrix> tables;
  std::vector<Matrix> top_w;
  std::vector<Vector> top_b;
};

/// Scratch for the scalar teacher forward pass.
struct TeacherScratch {
  Vector a, b, pooled, inter;
  std::vector<const double*> vec_ptr;
};

/// The realized drift: anchor parameter sets at the schedule's anchor
/// times, evaluated by piecewise-linear interpolation (constant beyond the
/// last anchor). Immutable after construction.
class Teacher {
 public:
  Teacher(const StreamConfig& cfg, const DriftSchedule& sched);

  /// Materialized parameters at sample index t.
  TeacherParams at(uint64_t t) const;
  const TeacherParams& anchor(int j) const { return anchors_[j]; }
  int num_anchors() const { return static_cast<int>(anchors_.size()); }

  /// (segment index j, fraction u in [0,1)) such that t sits between
  /// anchors j and j+1. Anchor times map to u == 0 exactly.
  std::pair<int, double> segment_at(uint64_t t) const;

  /// Label probability for one example, parameters interpolated on the fly.
  /// Bit-identical to evaluating at(t) and running the same scalar pass.
  double prob(uint64_t t, const double* dense,
              const uint32_t* const* ids, const int* id_counts,
              TeacherScratch& scratch) const;

  const StreamConfig& config() const { return cfg_; }
  const DriftSchedule& schedule() const { return sched_; }

 private:
  StreamConfig cfg_;
  DriftSchedule sched_;
  std::vector<TeacherParams> anchors_;
};

/// L2 norm of the flattened parameter set.
double teacher_norm(const TeacherParams& p);
/// L2 norm of the MLP block alone (the part that drifts between anchors).
double teacher_mlp_norm(const TeacherParams& p);
/// L2 distance between two flattened parameter sets.
double teacher_distance(const TeacherParams& a, const TeacherParams& b);

/// Convenience forms mirroring the library surface used by reports.
TeacherParams teacher_at(const Teacher& t, uint64_t time);
double drift_distance(const Teacher& t, uint64_t t1, uint64_t t2);

/// Deterministic stream generator. Every example is derived from
/// (seed, sample index) counters: any t-range can be regenerated or sampled
/// concurrently without shared state.
class StreamGenerator {
 public:
  StreamGenerator(StreamConfig cfg, DriftSchedule sched);

  /// n examples starting at sample index t.
  Batch batch(uint64_t t, int n) const;

  const StreamConfig& config() const { return cfg_; }
  const DriftSchedule& schedule() const { return sched_; }
  const Teacher& teacher() const { return teacher_; }

 private:
  uint32_t zipf_rank(int table, double u) const;
  uint32_t drifted_id(int table, uint32_t rank, int seg, double frac,
                      double u_blend) const;

  StreamConfig cfg_;
  DriftSchedule sched_;
  Teacher teacher_;
  std::vector<Vector> zipf_cdf_;  // per table, cumulative over ranks
  // [table][anchor][rank] -> entity id
  std::vector<std::vector<std::vector<uint32_t>>> perms_;
};

}  // namespace d2s
