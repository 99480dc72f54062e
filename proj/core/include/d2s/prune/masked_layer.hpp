#pragma once

#include "d2s/tensor.hpp"

namespace d2s {

/// FC weights equipped with a binary mask driven by a latent auxiliary
/// parameter per entry. The effective weight is theta_i * 1{aux_i > 0};
/// aux_i == 0 counts as pruned. Pruned entries keep their stored theta so
/// unpruning restores the old value exactly. Biases are never pruned.
struct MaskedLayer {
  Matrix theta;
  Vector bias;
  Matrix aux;          // latent mask parameter a
  Matrix momentum;     // gradient EMA s
  Matrix grad_masked;  // d(loss)/d(effective weight), all entries
  Vector bias_grad;
  Matrix theta_acc;    // Adagrad state for theta
  Vector bias_acc;

  MaskedLayer() = default;
  MaskedLayer(int out, int in)
      : theta(out, in),
        bias(out, 0.0),
        aux(out, in),
        momentum(out, in),
        grad_masked(out, in),
        bias_grad(out, 0.0),
        theta_acc(out, in),
        bias_acc(out, 0.0) {}

  int out_dim() const { return theta.rows; }
  int in_dim() const { return theta.cols; }
  bool alive(size_t flat) const { return aux.v[flat] > 0.0; }
};

}  // namespace d2s
