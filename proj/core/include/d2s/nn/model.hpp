#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "d2s/nn/interaction.hpp"
#include "d2s/nn/layer.hpp"
#include "d2s/prune/masked_layer.hpp"
#include "d2s/tensor.hpp"

namespace d2s {

enum class Activation { kRelu, kTanh };

/// Topology and training hyperparameters of the recommendation model:
/// dense features -> bottom MLP; categorical features -> embedding lookup
/// with mean pooling; pairwise dot interaction; top MLP -> single logit.
struct ModelConfig {
  int dense_dim = 16;
  std::vector<int> bottom_mlp = {32, 16};
  std::vector<int> embedding_rows = {1000, 1000, 1000, 1000};
  int embedding_dim = 16;
  std::vector<int> top_mlp = {64, 32, 1};
  Activation activation = Activation::kRelu;
  double lr = 0.05;
  double adagrad_eps = 1e-8;

  int num_tables() const { return static_cast<int>(embedding_rows.size()); }
  // bottom output joins the pooled embeddings in the interaction
  int interaction_vectors() const { return num_tables() + 1; }
  int top_input_width() const {
    return interaction_width(embedding_dim, interaction_vectors());
  }
  /// Throws std::invalid_argument if widths are inconsistent.
  void validate() const;
};

/// FC layers are either plain or mask-equipped; the forward pass treats a
/// masked layer exactly as a dense layer over theta * 1{aux > 0}.
using FcLayer = std::variant<DenseParam, MaskedLayer>;

/// A contiguous slice of the labeled stream. Categorical ids are stored
/// flat per table with offsets[i]..offsets[i+1] delimiting example i.
struct Batch {
  Matrix dense;  // n x dense_dim
  std::vector<std::vector<uint32_t>> ids;      // [table][flat id list]
  std::vector<std::vector<uint32_t>> offsets;  // [table][n + 1]
  Vector labels;                               // n entries in {0, 1}
  uint64_t virtual_time = 0;  // sample index of the first example

  int size() const { return dense.rows; }
};

struct RecModel {
  ModelConfig cfg;
  std::vector<FcLayer> bottom;
  std::vector<EmbeddingTable> tables;
  std::vector<FcLayer> top;
  uint64_t virtual_time = 0;  // sample-index timestamp of this snapshot
};

/// Activations saved by forward for the matching backward call, plus
/// reusable scratch. One cache per training loop; reuse avoids churn.
struct ForwardCache {
  std::vector<Matrix> bottom_z, bottom_h;
  std::vector<Matrix> pooled;  // per table, n x dim
  Matrix interact;             // n x top_input_width
  std::vector<Matrix> top_z, top_h;
  Vector logits, probs;

  std::vector<Matrix> eff_bottom, eff_top;  // effective-weight scratch
  std::vector<Matrix> d_bottom, d_pooled, d_top;
  Matrix d_interact;

  uint64_t batch_tag = ~0ull;
  int batch_n = -1;
};

/// Seeded construction; weights ~ uniform(-sqrt(6/(in+out)), +sqrt(...)).
/// With masked=true every FC layer carries an auxiliary mask initialized
/// to +0.5 (everything alive, day-0 output equals the dense model).
RecModel build_model(const ModelConfig& cfg, uint64_t seed,
                     bool masked = false);

/// Dense -> masked clone: theta/bias/Adagrad state carry over, aux = +0.5,
/// momentum = 0. Already-masked layers are copied as-is.
RecModel to_masked(const RecModel& m);

/// Batched forward pass; returns per-example probabilities sigmoid(logit).
/// Throws on shape mismatch (configuration error) or out-of-range entity
/// ids (data error).
const Vector& forward(const RecModel& model, const Batch& batch,
                      ForwardCache& cache);

/// Reverse-mode gradients of the mean clamped CE wrt every parameter.
/// Masked layers receive the gradient wrt the effective (masked) weight in
/// grad_masked. Requires the cache of a forward over the same batch.
void backward(RecModel& model, const Batch& batch, ForwardCache& cache);

/// forward + CE + backward + Adagrad step. Masked layers update only
/// entries with aux > 0 (a zero gradient elsewhere); biases, embeddings and
/// plain layers always update. Returns the batch CE.
double train_step(RecModel& model, const Batch& batch, ForwardCache& cache);

/// Optimizer-only part of train_step (grads must be populated).
void optimizer_step(RecModel& model);

// --- FcLayer access helpers ---
int fc_out_dim(const FcLayer& l);
int fc_in_dim(const FcLayer& l);
bool fc_is_masked(const FcLayer& l);
const Matrix& fc_weights(const FcLayer& l);  // theta view, mask ignored
Matrix& fc_weights(FcLayer& l);
const Vector& fc_bias(const FcLayer& l);
Vector& fc_bias(FcLayer& l);
Matrix& fc_grad(FcLayer& l);  // grad or grad_masked slot
const Matrix& fc_grad(const FcLayer& l);

/// Visits every masked FC layer in a fixed order (bottom, then top).
template <class F>
void for_each_masked(RecModel& m, F&& f) {
  for (auto& l : m.bottom)
    if (auto* ml = std::get_if<MaskedLayer>(&l)) f(*ml);
  for (auto& l : m.top)
    if (auto* ml = std::get_if<MaskedLayer>(&l)) f(*ml);
}

template <class F>
void for_each_masked(const RecModel& m, F&& f) {
  for (const auto& l : m.bottom)
    if (const auto* ml = std::get_if<MaskedLayer>(&l)) f(*ml);
  for (const auto& l : m.top)
    if (const auto* ml = std::get_if<MaskedLayer>(&l)) f(*ml);
}

}  // namespace d2s
