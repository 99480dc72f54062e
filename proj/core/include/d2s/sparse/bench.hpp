#pragma once

#include <cstdint>
#include <vector>

#include "d2s/sparse/csr.hpp"

namespace d2s {

/// One micro-benchmark row: dense vs CSR matvec on a size x size matrix.
/// Flop counts are multiply-adds over maskable weights, so
/// flops_sparse / flops_dense == 1 - sparsity holds exactly.
struct BenchResult {
  int size = 0;
  double sparsity = 0.0;
  double dense_ns = 0.0;   // median wall-clock per matvec
  double sparse_ns = 0.0;
  double speedup = 0.0;    // dense_ns / sparse_ns
  int64_t flops_dense = 0;
  int64_t flops_sparse = 0;
};

struct BenchConfig {
  std::vector<int> sizes = {256, 1024, 4096};
  std::vector<double> sparsities = {0.5, 0.8, 0.9, 0.95};
  int repetitions = 9;  // medians over this many timed repetitions
  int warmup = 2;
  uint64_t seed = 123;
};

/// Random mask with exactly floor(sparsity * n) entries pruned.
std::vector<uint8_t> random_mask(int rows, int cols, double sparsity,
                                 uint64_t seed);

/// Runs the dense/sparse matvec comparison single-threaded; timing uses a
/// monotonic clock with warmup discarded.
std::vector<BenchResult> run_bench(const BenchConfig& cfg);

}  // namespace d2s
