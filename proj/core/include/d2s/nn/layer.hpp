#pragma once

#include <cstdint>
#include <vector>

#include "d2s/tensor.hpp"

namespace d2s {

/// Fully-connected layer parameters with Adagrad state.
/// values is (out x in); gradients and accumulators mirror the shapes.
struct DenseParam {
  Matrix values;
  Vector bias;
  Matrix grad;
  Vector bias_grad;
  Matrix acc;       // sum of squared gradients, elementwise, nondecreasing
  Vector bias_acc;

  DenseParam() = default;
  DenseParam(int out, int in)
      : values(out, in),
        bias(out, 0.0),
        grad(out, in),
        bias_grad(out, 0.0),
        acc(out, in),
        bias_acc(out, 0.0) {}

  int out_dim() const { return values.rows; }
  int in_dim() const { return values.cols; }
};

/// Embedding table with per-row lookup + mean pooling. Gradients are kept
/// dense but only rows touched by the last backward pass are nonzero; the
/// touched list lets the optimizer skip the rest (a zero gradient leaves
/// both the value and the accumulator unchanged).
struct EmbeddingTable {
  Matrix table;  // rows x dim
  Matrix grad;
  Matrix acc;
  std::vector<uint32_t> touched;  // rows written by the last backward

  EmbeddingTable() = default;
  EmbeddingTable(int rows, int dim)
      : table(rows, dim), grad(rows, dim), acc(rows, dim) {}

  int rows() const { return table.rows; }
  int dim() const { return table.cols; }
};

/// One Adagrad update: acc += g^2; value -= lr * g / (sqrt(acc) + eps).
/// Throws on nonpositive lr.
void adagrad_step(DenseParam& p, double lr, double eps);

/// Adagrad over the touched rows only (identical result to a full sweep).
void adagrad_step(EmbeddingTable& t, double lr, double eps);

namespace detail {
void adagrad_update(double* value, const double* grad, double* acc, size_t n,
                    double lr, double eps);
void check_lr(double lr);
}  // namespace detail

}  // namespace d2s
