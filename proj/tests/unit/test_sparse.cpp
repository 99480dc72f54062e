#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "d2s/prune/pruning.hpp"
#include "d2s/rng.hpp"
#include "d2s/sparse/bench.hpp"
#include "d2s/sparse/csr.hpp"
#include "support/test_util.hpp"

using namespace d2s;
using namespace d2s_test;

namespace {

MaskedLayer random_masked(int rows, int cols, double prune_prob,
                          uint64_t seed) {
  MaskedLayer l(rows, cols);
  Rng rng(seed);
  for (auto& x : l.theta.v) x = rng.next_normal();
  for (auto& a : l.aux.v) a = rng.next_double() < prune_prob ? -1.0 : 1.0;
  return l;
}

// dense reference: y = (theta o mask) x
Vector dense_masked_matvec(const MaskedLayer& l, const Vector& x) {
  Vector y(static_cast<size_t>(l.out_dim()), 0.0);
  for (int r = 0; r < l.out_dim(); ++r) {
    double s = 0.0;
    for (int c = 0; c < l.in_dim(); ++c) {
      const size_t k = static_cast<size_t>(r) * l.in_dim() + c;
      if (l.aux.v[k] > 0.0) s += l.theta.v[k] * x[static_cast<size_t>(c)];
    }
    y[static_cast<size_t>(r)] = s;
  }
  return y;
}

}  // namespace

TEST_CASE("to_csr structure") {
  SUBCASE("fully dense mask keeps every entry") {
    const MaskedLayer l = random_masked(4, 6, 0.0, 1);
    const CsrMatrix a = to_csr(l);
    CHECK(a.nnz() == 24);
    CHECK(a.row_offsets.size() == 5);
  }
  SUBCASE("fully pruned layer yields empty rows") {
    const MaskedLayer l = random_masked(4, 6, 1.0, 1);
    const CsrMatrix a = to_csr(l);
    CHECK(a.nnz() == 0);
    for (int off : a.row_offsets) CHECK(off == 0);
  }
  SUBCASE("diagonal mask gives a diagonal CSR") {
    MaskedLayer l(2, 2);
    l.theta.v = {1.5, 2.5, 3.5, 4.5};
    l.aux.v = {1.0, -1.0, -1.0, 1.0};
    const CsrMatrix a = to_csr(l);
    REQUIRE(a.nnz() == 2);
    CHECK(a.col_idx[0] == 0);
    CHECK(a.col_idx[1] == 1);
    CHECK(a.values[0] == 1.5);
    CHECK(a.values[1] == 4.5);
  }
  SUBCASE("offsets nondecreasing, column indices strictly increasing") {
    const MaskedLayer l = random_masked(16, 16, 0.7, 3);
    const CsrMatrix a = to_csr(l);
    for (int r = 0; r < a.rows; ++r) {
      CHECK(a.row_offsets[r] <= a.row_offsets[r + 1]);
      for (int k = a.row_offsets[r] + 1; k < a.row_offsets[r + 1]; ++k)
        CHECK(a.col_idx[k - 1] < a.col_idx[k]);
    }
    CHECK(a.nnz() ==
          static_cast<int64_t>(l.theta.size()) - pruned_count(l));
  }
}

TEST_CASE("spmv") {
  SUBCASE("identity passes the vector through") {
    MaskedLayer l(3, 3);
    l.theta.v = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    l.aux.fill(1.0);
    const Vector x{2.0, -3.0, 4.5};
    CHECK(spmv(to_csr(l), x) == x);
  }
  SUBCASE("empty matrix gives the zero vector") {
    const MaskedLayer l = random_masked(5, 4, 1.0, 2);
    const Vector y = spmv(to_csr(l), Vector(4, 1.0));
    for (double v : y) CHECK(v == 0.0);
  }
  SUBCASE("random 32x32 at 80% sparsity matches the dense oracle") {
    Rng rng(11);
    const MaskedLayer l = random_masked(32, 32, 0.8, 4);
    Vector x(32);
    for (auto& v : x) v = rng.next_normal();
    const Vector got = spmv(to_csr(l), x);
    const Vector want = dense_masked_matvec(l, x);
    for (size_t i = 0; i < got.size(); ++i) {
      const double denom = std::max(std::abs(want[i]), 1e-30);
      CHECK(std::abs(got[i] - want[i]) / denom < 1e-12);
    }
  }
  SUBCASE("dimension mismatch is a configuration error") {
    const MaskedLayer l = random_masked(3, 3, 0.0, 1);
    CHECK_THROWS_AS(spmv(to_csr(l), Vector(4, 1.0)), std::invalid_argument);
  }
  SUBCASE("randomized equivalence property across shapes and sparsities") {
    Rng rng(21);
    for (int trial = 0; trial < 30; ++trial) {
      const int rows = 1 + static_cast<int>(rng.next_below(40));
      const int cols = 1 + static_cast<int>(rng.next_below(40));
      const double prune = rng.next_double();
      const MaskedLayer l = random_masked(rows, cols, prune, 100 + trial);
      Vector x(static_cast<size_t>(cols));
      for (auto& v : x) v = rng.next_normal();
      const Vector got = spmv(to_csr(l), x);
      const Vector want = dense_masked_matvec(l, x);
      for (size_t i = 0; i < got.size(); ++i)
        CHECK(std::abs(got[i] - want[i]) <=
              1e-12 * std::max(1.0, std::abs(want[i])));
    }
  }
}

TEST_CASE("spmm matches per-row spmv") {
  const MaskedLayer l = random_masked(8, 12, 0.5, 7);
  const CsrMatrix a = to_csr(l);
  Matrix x(5, 12);
  Rng rng(8);
  for (auto& v : x.v) v = rng.next_normal();
  Matrix y;
  spmm(a, x, y);
  for (int i = 0; i < 5; ++i) {
    const Vector xi(x.row(i), x.row(i) + 12);
    const Vector yi = spmv(a, xi);
    for (int r = 0; r < 8; ++r) CHECK(y.at(i, r) == yi[static_cast<size_t>(r)]);
  }
}

TEST_CASE("flop accounting identity") {
  SUBCASE("power-of-two shapes make the ratio exact in f64") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      const double sparsity_target = rng.next_double();
      const auto alive = random_mask(64, 64, sparsity_target, 500 + trial);
      Matrix theta(64, 64);
      for (auto& v : theta.v) v = rng.next_normal();
      const CsrMatrix a = to_csr(theta, alive);
      const int64_t total = dense_flops(a);
      const double sparsity =
          static_cast<double>(total - a.nnz()) / static_cast<double>(total);
      const double ratio = static_cast<double>(sparse_flops(a)) /
                           static_cast<double>(dense_flops(a));
      CHECK(ratio == 1.0 - sparsity);
    }
  }
  SUBCASE("integer identity holds for arbitrary shapes") {
    Rng rng(32);
    for (int trial = 0; trial < 100; ++trial) {
      const int rows = 1 + static_cast<int>(rng.next_below(50));
      const int cols = 1 + static_cast<int>(rng.next_below(50));
      const MaskedLayer l = random_masked(rows, cols, rng.next_double(),
                                          900 + trial);
      const CsrMatrix a = to_csr(l);
      CHECK(sparse_flops(a) + pruned_count(l) == dense_flops(a));
    }
  }
}

TEST_CASE("random_mask prunes exactly floor(s * n)") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const int rows = 1 + static_cast<int>(rng.next_below(30));
    const int cols = 1 + static_cast<int>(rng.next_below(30));
    const double s = rng.next_double();
    const auto alive = random_mask(rows, cols, s, trial);
    int64_t pruned = 0;
    for (uint8_t a : alive) pruned += a == 0;
    CHECK(pruned == static_cast<int64_t>(
                        std::floor(s * rows * cols + 1e-9)));
  }
}

TEST_CASE("sparse model forward matches the masked dense path") {
  const ModelConfig mcfg = toy_model_config();
  RecModel m = build_model(mcfg, 19, /*masked=*/true);
  Rng rng(9);
  for_each_masked(m, [&](MaskedLayer& l) {
    for (auto& a : l.aux.v) a = rng.next_double() < 0.6 ? -1.0 : 1.0;
  });
  const StreamGenerator stream(toy_stream_config(), toy_drift());
  const Batch batch = stream.batch(0, 64);
  ForwardCache cache;
  const Vector& dense_probs = forward(m, batch, cache);
  const SparseModel sm = lower_to_sparse(m);
  const Vector sparse_probs = sparse_forward(sm, batch);
  REQUIRE(dense_probs.size() == sparse_probs.size());
  for (size_t i = 0; i < dense_probs.size(); ++i)
    CHECK(std::abs(dense_probs[i] - sparse_probs[i]) <=
          1e-12 * std::max(1.0, std::abs(dense_probs[i])));
}

TEST_CASE("bench harness") {
  BenchConfig cfg;
  cfg.sizes = {64};
  cfg.sparsities = {0.0, 0.9};
  cfg.repetitions = 3;
  cfg.warmup = 1;
  const auto rows = run_bench(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].sparsity == 0.0);
  CHECK(rows[0].flops_sparse == rows[0].flops_dense);
  CHECK(static_cast<double>(rows[1].flops_sparse) /
            static_cast<double>(rows[1].flops_dense) ==
        1.0 - rows[1].sparsity);
  for (const auto& r : rows) {
    CHECK(r.dense_ns > 0.0);
    CHECK(r.sparse_ns > 0.0);
    CHECK(r.speedup > 0.0);
  }
}
