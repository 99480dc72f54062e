#include "d2s/sparse/csr.hpp"

#include <stdexcept>

#include "d2s/nn/interaction.hpp"
#include "d2s/nn/loss.hpp"

namespace d2s {

static CsrMatrix build_csr(const Matrix& theta,
                           const std::vector<uint8_t>& alive) {
  CsrMatrix a;
  a.rows = theta.rows;
  a.cols = theta.cols;
  a.row_offsets.resize(static_cast<size_t>(theta.rows) + 1, 0);
  for (int r = 0; r < theta.rows; ++r) {
    const size_t base = static_cast<size_t>(r) * theta.cols;
    for (int c = 0; c < theta.cols; ++c) {
      if (alive[base + static_cast<size_t>(c)]) {
        a.col_idx.push_back(c);
        a.values.push_back(theta.v[base + static_cast<size_t>(c)]);
      }
    }
    a.row_offsets[static_cast<size_t>(r) + 1] =
        static_cast<int>(a.col_idx.size());
  }
  return a;
}

CsrMatrix to_csr(const MaskedLayer& l) {
  std::vector<uint8_t> alive(l.aux.size());
  for (size_t i = 0; i < l.aux.size(); ++i) alive[i] = l.aux.v[i] > 0.0;
  return build_csr(l.theta, alive);
}

CsrMatrix to_csr(const Matrix& theta, const std::vector<uint8_t>& alive) {
  if (alive.size() != theta.size())
    throw std::invalid_argument(
        "configuration error: mask size does not match the matrix");
  return build_csr(theta, alive);
}

void spmv(const CsrMatrix& a, const double* x, double* y) {
  for (int r = 0; r < a.rows; ++r) {
    double s = 0.0;
    const int begin = a.row_offsets[r], end = a.row_offsets[r + 1];
    for (int k = begin; k < end; ++k) s += a.values[k] * x[a.col_idx[k]];
    y[r] = s;
  }
}

Vector spmv(const CsrMatrix& a, const Vector& x) {
  if (static_cast<int>(x.size()) != a.cols)
    throw std::invalid_argument(
        "configuration error: spmv dimension mismatch");
  Vector y(static_cast<size_t>(a.rows));
  spmv(a, x.data(), y.data());
  return y;
}

void spmm(const CsrMatrix& a, const Matrix& x, Matrix& y) {
  if (x.cols != a.cols)
    throw std::invalid_argument(
        "configuration error: spmm dimension mismatch");
  y.resize(x.rows, a.rows);
  for (int i = 0; i < x.rows; ++i) spmv(a, x.row(i), y.row(i));
}

SparseModel lower_to_sparse(const RecModel& model) {
  SparseModel out;
  out.cfg = model.cfg;
  auto lower = [](const FcLayer& l) {
    SparseFcLayer s;
    s.bias = fc_bias(l);
    if (const auto* ml = std::get_if<MaskedLayer>(&l)) {
      s.w = to_csr(*ml);
    } else {
      const auto& d = std::get<DenseParam>(l);
      std::vector<uint8_t> alive(d.values.size(), 1);
      s.w = to_csr(d.values, alive);
    }
    return s;
  };
  for (const auto& l : model.bottom) out.bottom.push_back(lower(l));
  for (const auto& l : model.top) out.top.push_back(lower(l));
  for (const auto& t : model.tables) out.tables.push_back(t.table);
  return out;
}

Vector sparse_forward(const SparseModel& model, const Batch& batch) {
  const auto& cfg = model.cfg;
  const int n = batch.size();
  const int n_tables = cfg.num_tables();

  auto act = [&](double z) {
    return cfg.activation == Activation::kRelu ? (z > 0.0 ? z : 0.0)
                                               : std::tanh(z);
  };

  Matrix cur = batch.dense, next;
  for (const auto& l : model.bottom) {
    spmm(l.w, cur, next);
    for (int i = 0; i < n; ++i) {
      double* r = next.row(i);
      for (int o = 0; o < l.w.rows; ++o) r[o] = act(r[o] + l.bias[o]);
    }
    std::swap(cur, next);
  }

  std::vector<Matrix> pooled(static_cast<size_t>(n_tables));
  for (int f = 0; f < n_tables; ++f) {
    const Matrix& t = model.tables[f];
    pooled[f].resize(n, t.cols);
    const auto& ids = batch.ids[f];
    const auto& off = batch.offsets[f];
    for (int i = 0; i < n; ++i) {
      const uint32_t b = off[i], e = off[i + 1];
      double* pr = pooled[f].row(i);
      if (e == b) continue;
      for (uint32_t k = b; k < e; ++k) {
        const double* row = t.row(static_cast<int>(ids[k]));
        for (int d = 0; d < t.cols; ++d) pr[d] += row[d];
      }
      const double inv = 1.0 / static_cast<double>(e - b);
      for (int d = 0; d < t.cols; ++d) pr[d] *= inv;
    }
  }

  const int n_vec = cfg.interaction_vectors();
  Matrix inter(n, cfg.top_input_width());
  std::vector<const double*> vecs(static_cast<size_t>(n_vec));
  for (int i = 0; i < n; ++i) {
    vecs[0] = cur.row(i);
    for (int f = 0; f < n_tables; ++f) vecs[f + 1] = pooled[f].row(i);
    dot_interaction_into(vecs.data(), n_vec, cfg.embedding_dim, inter.row(i));
  }

  cur = std::move(inter);
  const int n_top = static_cast<int>(model.top.size());
  for (int l = 0; l < n_top; ++l) {
    spmm(model.top[l].w, cur, next);
    const bool last = l + 1 == n_top;
    for (int i = 0; i < n; ++i) {
      double* r = next.row(i);
      for (int o = 0; o < model.top[l].w.rows; ++o) {
        const double z = r[o] + model.top[l].bias[o];
        r[o] = last ? z : act(z);
      }
    }
    std::swap(cur, next);
  }

  Vector probs(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) probs[static_cast<size_t>(i)] = sigmoid(cur.at(i, 0));
  return probs;
}

}  // namespace d2s
