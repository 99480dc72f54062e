#pragma once

#include <cstdint>
#include <vector>

#include "d2s/nn/model.hpp"
#include "d2s/prune/masked_layer.hpp"
#include "d2s/tensor.hpp"

namespace d2s {

/// Compressed sparse row matrix over the live entries of a masked layer.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_offsets;  // rows + 1, nondecreasing
  std::vector<int> col_idx;      // strictly increasing within a row
  std::vector<double> values;

  int64_t nnz() const {
    return row_offsets.empty() ? 0 : row_offsets.back();
  }
};

/// CSR over entries with aux > 0; values are theta.
CsrMatrix to_csr(const MaskedLayer& l);
/// CSR over entries with alive[flat] != 0.
CsrMatrix to_csr(const Matrix& theta, const std::vector<uint8_t>& alive);

/// y = A x. Checked wrapper below throws on dimension mismatch.
void spmv(const CsrMatrix& a, const double* x, double* y);
Vector spmv(const CsrMatrix& a, const Vector& x);

/// Y = X A^T for row-major X (n x cols) into Y (n x rows): the sparse twin
/// of the dense affine step without bias.
void spmm(const CsrMatrix& a, const Matrix& x, Matrix& y);

/// Multiply-add counts for one matvec of this shape.
inline int64_t dense_flops(const CsrMatrix& a) {
  return static_cast<int64_t>(a.rows) * a.cols;
}
inline int64_t sparse_flops(const CsrMatrix& a) { return a.nnz(); }

/// Inference-only lowering of a model: every FC layer becomes CSR (a plain
/// layer is simply fully dense), embedding tables are copied by value.
struct SparseFcLayer {
  CsrMatrix w;
  Vector bias;
};

struct SparseModel {
  ModelConfig cfg;
  std::vector<SparseFcLayer> bottom, top;
  std::vector<Matrix> tables;
};

SparseModel lower_to_sparse(const RecModel& model);

/// Forward pass through the CSR layers; matches the masked dense forward
/// to ~1e-12 relative.
Vector sparse_forward(const SparseModel& model, const Batch& batch);

}  // namespace d2s
