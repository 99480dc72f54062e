#include "d2s/sparse/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "d2s/rng.hpp"

namespace d2s {

std::vector<uint8_t> random_mask(int rows, int cols, double sparsity,
                                 uint64_t seed) {
  const size_t n = static_cast<size_t>(rows) * cols;
  const size_t pruned = static_cast<size_t>(
      std::floor(sparsity * static_cast<double>(n) + 1e-9));
  // rank random scores; the lowest `pruned` go dark
  Rng rng(seed);
  std::vector<uint64_t> score(n);
  for (auto& s : score) s = rng.next_u64();
  std::vector<uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [&](uint32_t a, uint32_t b) {
    if (score[a] != score[b]) return score[a] < score[b];
    return a < b;
  });
  std::vector<uint8_t> alive(n, 1);
  for (size_t k = 0; k < pruned; ++k) alive[idx[k]] = 0;
  return alive;
}

namespace {

// keep the optimizer from dropping the timed loop
inline void escape(const void* p) { asm volatile("" : : "g"(p) : "memory"); }

void dense_matvec(const Matrix& w, const double* x, double* y) {
  for (int r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    double s = 0.0;
    for (int c = 0; c < w.cols; ++c) s += wr[c] * x[c];
    y[r] = s;
  }
}

template <class F>
double median_ns_per_call(F&& body, int reps, int warmup, int iters) {
  std::vector<double> samples;
  samples.reserve(static_cast<size_t>(reps));
  for (int rep = 0; rep < warmup + reps; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int it = 0; it < iters; ++it) body();
    const auto t1 = std::chrono::steady_clock::now();
    if (rep < warmup) continue;
    const double ns =
        std::chrono::duration<double, std::nano>(t1 - t0).count() /
        static_cast<double>(iters);
    samples.push_back(ns);
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

std::vector<BenchResult> run_bench(const BenchConfig& cfg) {
  std::vector<BenchResult> out;
  for (int size : cfg.sizes) {
    Matrix w(size, size);
    Rng rng(mix_keys(cfg.seed, static_cast<uint64_t>(size)));
    for (auto& x : w.v) x = rng.next_uniform(-1.0, 1.0);
    Vector x(static_cast<size_t>(size));
    for (auto& v : x) v = rng.next_uniform(-1.0, 1.0);
    Vector y(static_cast<size_t>(size));

    // enough inner iterations to make one repetition measurable
    const int iters = std::max(
        1, static_cast<int>(8'000'000 / (static_cast<int64_t>(size) * size)));

    for (double sp : cfg.sparsities) {
      const std::vector<uint8_t> alive =
          random_mask(size, size, sp, mix_keys(cfg.seed, size, 777));
      const CsrMatrix a = to_csr(w, alive);

      BenchResult r;
      r.size = size;
      const int64_t total = static_cast<int64_t>(size) * size;
      r.flops_dense = total;
      r.flops_sparse = a.nnz();
      r.sparsity = static_cast<double>(total - a.nnz()) /
                   static_cast<double>(total);
      r.dense_ns = median_ns_per_call(
          [&] {
            dense_matvec(w, x.data(), y.data());
            escape(y.data());
          },
          cfg.repetitions, cfg.warmup, iters);
      r.sparse_ns = median_ns_per_call(
          [&] {
            spmv(a, x.data(), y.data());
            escape(y.data());
          },
          cfg.repetitions, cfg.warmup, iters);
      r.speedup = r.sparse_ns > 0.0 ? r.dense_ns / r.sparse_ns : 0.0;
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace d2s
