#pragma once

#include <cstdint>
#include <vector>

#include "d2s/nn/model.hpp"
#include "d2s/prune/masked_layer.hpp"
#include "d2s/tensor.hpp"

namespace d2s {

/// Initial value of the auxiliary parameter: every weight starts alive and
/// the day-0 masked model equals the dense model exactly.
inline constexpr double kAuxInit = 0.5;

struct PruneConfig {
  enum class Algo { kAux, kMagnitude, kTaylor, kMomentum };
  enum class Ste { kLinear, kRelu };

  Algo algorithm = Algo::kAux;
  double lambda = 0.3;  // sparsity penalty; higher prunes more
  double w1 = 0.5;      // Taylor-term weight (momentum term for MoP)
  double w2 = 0.5;      // magnitude-term weight
  double aux_lr = 0.01;  // constant step size for the auxiliary update
  Ste ste = Ste::kLinear;
  // MP/TP/MoP rank to this sparsity; AUX reaches its sparsity through lambda.
  double target_sparsity = 0.8;
  uint64_t prune_phase_samples = 50000;  // linear ramp length for ranked pruning
  bool rescale = true;           // per-layer L1 normalization of both criteria
  bool signed_taylor = false;    // vanilla rule: raw signed g*theta, no abs
  double momentum_decay = 0.99;  // gradient EMA decay
  uint64_t refresh_interval = 25000;  // MoP mask-adaptation cadence, samples

  void validate() const;
};

/// Per-layer importance, always nonnegative for ranking criteria.
struct ImportanceScore {
  enum class Criterion { kMagnitude, kTaylor, kMop };
  Matrix scores;
  Criterion criterion = Criterion::kMagnitude;
};

/// Effective weights theta * 1{aux > 0}; aux == 0 counts as pruned.
Matrix apply_mask(const MaskedLayer& l);
void apply_mask_into(const MaskedLayer& l, Matrix& out);

/// |g_i * theta_i| per entry, g taken wrt the masked weight.
ImportanceScore taylor_scores(const MaskedLayer& l, const Matrix& grad_masked);

/// |theta_i| per entry.
ImportanceScore magnitude_scores(const MaskedLayer& l);

/// One auxiliary-mask update. With rescale both criterion terms are
/// L1-normalized per layer; a layer with ||g o theta||_1 == 0 skips that
/// term. Linear STE updates every entry; ReLU STE leaves entries with
/// aux <= 0 untouched. theta itself is never modified here.
void aux_step(MaskedLayer& l, const Matrix& grad_masked,
              const PruneConfig& cfg);

/// Linear ramp of the pruning ratio: min(target, target * step / phase).
double mp_ratio_at(uint64_t step, const PruneConfig& cfg);

/// Prunes the bottom floor(ratio * count) entries by score; ties prune the
/// lower flat index first. aux is overwritten with -1/+1 sentinels.
void rank_prune(MaskedLayer& l, const ImportanceScore& scores, double ratio);

/// s <- decay * s + (1 - decay) * g, elementwise.
void momentum_update(MaskedLayer& l, const Matrix& grad_masked, double decay);

/// w1 * |theta|/||theta||_1 + w2 * |s|/||S||_1, norms per layer. A layer
/// with zero momentum mass drops the momentum term.
ImportanceScore mop_importance(const MaskedLayer& l, double w1, double w2);

/// Rebuild the mask keeping the top (1 - target_sparsity) by mop_importance.
/// Previously pruned entries may come back.
void mop_refresh(MaskedLayer& l, const PruneConfig& cfg);

/// Adagrad on theta restricted to live entries (aux > 0); bias always.
void masked_adagrad_step(MaskedLayer& l, double lr, double eps);

/// One training step under a frozen sparsity pattern: only unpruned weights
/// move, aux is untouched. Identical to train_step, named for intent.
double finetune_step_fixed_mask(RecModel& model, const Batch& batch,
                                ForwardCache& cache);

/// One pruning-phase step: forward/backward, then the mask update for the
/// configured algorithm, then a live-mask weight update with the same
/// gradients. samples_into_phase includes the current batch and drives the
/// ramp for ranked criteria. Returns the batch CE.
double prune_phase_step(RecModel& model, const Batch& batch,
                        ForwardCache& cache, const PruneConfig& cfg,
                        uint64_t samples_into_phase);

int64_t pruned_count(const MaskedLayer& l);
double sparsity(const MaskedLayer& l);
/// Weighted by layer size over maskable entries; biases and embeddings are
/// not part of the denominator. A model with no masked layers reports 0.
double sparsity(const RecModel& model);
std::vector<double> per_layer_sparsity(const RecModel& model);

/// Flattened mask bits for all masked layers (1 = alive), fixed layer order.
std::vector<uint8_t> mask_bits(const RecModel& model);

}  // namespace d2s
