#include "d2s/nn/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "d2s/nn/loss.hpp"
#include "d2s/prune/pruning.hpp"
#include "d2s/rng.hpp"

namespace d2s {

void ModelConfig::validate() const {
  if (dense_dim < 1)
    throw std::invalid_argument("configuration error: dense_dim must be >= 1");
  if (bottom_mlp.empty() || top_mlp.empty())
    throw std::invalid_argument(
        "configuration error: bottom_mlp and top_mlp must be non-empty");
  if (embedding_rows.empty())
    throw std::invalid_argument(
        "configuration error: at least one embedding table is required");
  for (int w : bottom_mlp)
    if (w < 1)
      throw std::invalid_argument(
          "configuration error: bottom_mlp widths must be >= 1");
  for (int w : top_mlp)
    if (w < 1)
      throw std::invalid_argument(
          "configuration error: top_mlp widths must be >= 1");
  for (int r : embedding_rows)
    if (r < 1)
      throw std::invalid_argument(
          "configuration error: embedding tables need >= 1 row");
  if (bottom_mlp.back() != embedding_dim)
    throw std::invalid_argument(
        "configuration error: bottom_mlp output width (" +
        std::to_string(bottom_mlp.back()) + ") must equal embedding_dim (" +
        std::to_string(embedding_dim) + ") for the dot interaction");
  if (top_mlp.back() != 1)
    throw std::invalid_argument(
        "configuration error: top_mlp must end in a single logit");
  if (!(lr > 0.0))
    throw std::invalid_argument("configuration error: lr must be positive");
  if (!(adagrad_eps > 0.0))
    throw std::invalid_argument(
        "configuration error: adagrad_eps must be positive");
}

// --- FcLayer helpers ---

int fc_out_dim(const FcLayer& l) {
  return std::visit([](const auto& p) { return p.out_dim(); }, l);
}
int fc_in_dim(const FcLayer& l) {
  return std::visit([](const auto& p) { return p.in_dim(); }, l);
}
bool fc_is_masked(const FcLayer& l) {
  return std::holds_alternative<MaskedLayer>(l);
}
const Matrix& fc_weights(const FcLayer& l) {
  if (const auto* d = std::get_if<DenseParam>(&l)) return d->values;
  return std::get<MaskedLayer>(l).theta;
}
Matrix& fc_weights(FcLayer& l) {
  if (auto* d = std::get_if<DenseParam>(&l)) return d->values;
  return std::get<MaskedLayer>(l).theta;
}
const Vector& fc_bias(const FcLayer& l) {
  if (const auto* d = std::get_if<DenseParam>(&l)) return d->bias;
  return std::get<MaskedLayer>(l).bias;
}
Vector& fc_bias(FcLayer& l) {
  if (auto* d = std::get_if<DenseParam>(&l)) return d->bias;
  return std::get<MaskedLayer>(l).bias;
}
Matrix& fc_grad(FcLayer& l) {
  if (auto* d = std::get_if<DenseParam>(&l)) return d->grad;
  return std::get<MaskedLayer>(l).grad_masked;
}
const Matrix& fc_grad(const FcLayer& l) {
  if (const auto* d = std::get_if<DenseParam>(&l)) return d->grad;
  return std::get<MaskedLayer>(l).grad_masked;
}
static Vector& fc_bias_grad(FcLayer& l) {
  if (auto* d = std::get_if<DenseParam>(&l)) return d->bias_grad;
  return std::get<MaskedLayer>(l).bias_grad;
}

// Weights as seen by the forward pass. Masked layers materialize
// theta * 1{aux > 0} into the caller's scratch so both execution paths run
// the exact same arithmetic on the same bytes.
static const Matrix& forward_weights(const FcLayer& l, Matrix& scratch) {
  if (const auto* d = std::get_if<DenseParam>(&l)) return d->values;
  apply_mask_into(std::get<MaskedLayer>(l), scratch);
  return scratch;
}

// --- construction ---

static double glorot_bound(int in, int out) {
  return std::sqrt(6.0 / static_cast<double>(in + out));
}

static void init_uniform(Matrix& m, Rng& rng, double bound) {
  for (auto& x : m.v) x = rng.next_uniform(-bound, bound);
}

static FcLayer make_fc(int out, int in, Rng& rng, bool masked) {
  if (masked) {
    MaskedLayer l(out, in);
    init_uniform(l.theta, rng, glorot_bound(in, out));
    l.aux.fill(kAuxInit);
    return l;
  }
  DenseParam p(out, in);
  init_uniform(p.values, rng, glorot_bound(in, out));
  return p;
}

RecModel build_model(const ModelConfig& cfg, uint64_t seed, bool masked) {
  cfg.validate();
  RecModel m;
  m.cfg = cfg;
  uint64_t k = 0;
  int in = cfg.dense_dim;
  for (int out : cfg.bottom_mlp) {
    Rng rng(mix_keys(seed, k++));
    m.bottom.push_back(make_fc(out, in, rng, masked));
    in = out;
  }
  for (int rows : cfg.embedding_rows) {
    Rng rng(mix_keys(seed, k++));
    EmbeddingTable t(rows, cfg.embedding_dim);
    init_uniform(t.table, rng, glorot_bound(rows, cfg.embedding_dim));
    m.tables.push_back(std::move(t));
  }
  in = cfg.top_input_width();
  for (int out : cfg.top_mlp) {
    Rng rng(mix_keys(seed, k++));
    m.top.push_back(make_fc(out, in, rng, masked));
    in = out;
  }
  return m;
}

static FcLayer masked_from(const FcLayer& l) {
  if (fc_is_masked(l)) return l;
  const auto& d = std::get<DenseParam>(l);
  MaskedLayer ml(d.out_dim(), d.in_dim());
  ml.theta = d.values;
  ml.bias = d.bias;
  ml.theta_acc = d.acc;
  ml.bias_acc = d.bias_acc;
  ml.aux.fill(kAuxInit);
  return ml;
}

RecModel to_masked(const RecModel& m) {
  RecModel out;
  out.cfg = m.cfg;
  out.tables = m.tables;
  out.virtual_time = m.virtual_time;
  out.bottom.reserve(m.bottom.size());
  out.top.reserve(m.top.size());
  for (const auto& l : m.bottom) out.bottom.push_back(masked_from(l));
  for (const auto& l : m.top) out.top.push_back(masked_from(l));
  return out;
}

// --- forward ---

static inline double act(double z, Activation a) {
  return a == Activation::kRelu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}
static inline double act_grad(double z, double h, Activation a) {
  return a == Activation::kRelu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - h * h;
}

// z = x W^T + b, one dot product per (example, output).
static void affine_forward(const Matrix& w, const Vector& b, const Matrix& x,
                           Matrix& z) {
  const int n = x.rows, out = w.rows, in = w.cols;
  z.resize(n, out);
  for (int i = 0; i < n; ++i) {
    const double* xr = x.row(i);
    double* zr = z.row(i);
    for (int o = 0; o < out; ++o) {
      const double* wr = w.row(o);
      double s = b[o];
      for (int k = 0; k < in; ++k) s += wr[k] * xr[k];
      zr[o] = s;
    }
  }
}

static void apply_activation(const Matrix& z, Matrix& h, Activation a) {
  h.resize(z.rows, z.cols);
  for (size_t i = 0; i < z.v.size(); ++i) h.v[i] = act(z.v[i], a);
}

static void check_batch(const RecModel& model, const Batch& batch) {
  const auto& cfg = model.cfg;
  if (batch.dense.cols != cfg.dense_dim)
    throw std::invalid_argument(
        "configuration error: batch dense width " +
        std::to_string(batch.dense.cols) + " != model dense_dim " +
        std::to_string(cfg.dense_dim));
  if (static_cast<int>(batch.ids.size()) != cfg.num_tables() ||
      static_cast<int>(batch.offsets.size()) != cfg.num_tables())
    throw std::invalid_argument(
        "configuration error: batch categorical feature count mismatch");
  const size_t n = static_cast<size_t>(batch.size());
  if (batch.labels.size() != n)
    throw std::runtime_error("data error: labels length mismatch");
  for (int f = 0; f < cfg.num_tables(); ++f) {
    if (batch.offsets[f].size() != n + 1)
      throw std::invalid_argument(
          "configuration error: offsets must have n+1 entries");
  }
}

const Vector& forward(const RecModel& model, const Batch& batch,
                      ForwardCache& cache) {
  check_batch(model, batch);
  const auto& cfg = model.cfg;
  const int n = batch.size();
  const int n_bottom = static_cast<int>(model.bottom.size());
  const int n_top = static_cast<int>(model.top.size());
  const int n_tables = cfg.num_tables();

  cache.bottom_z.resize(n_bottom);
  cache.bottom_h.resize(n_bottom);
  cache.eff_bottom.resize(n_bottom);
  cache.top_z.resize(n_top);
  cache.top_h.resize(n_top);
  cache.eff_top.resize(n_top);
  cache.pooled.resize(n_tables);

  // bottom MLP
  const Matrix* x = &batch.dense;
  for (int l = 0; l < n_bottom; ++l) {
    const Matrix& w = forward_weights(model.bottom[l], cache.eff_bottom[l]);
    affine_forward(w, fc_bias(model.bottom[l]), *x, cache.bottom_z[l]);
    apply_activation(cache.bottom_z[l], cache.bottom_h[l], cfg.activation);
    x = &cache.bottom_h[l];
  }

  // embedding lookup + mean pooling
  for (int f = 0; f < n_tables; ++f) {
    const EmbeddingTable& t = model.tables[f];
    Matrix& pooled = cache.pooled[f];
    pooled.resize(n, t.dim());
    pooled.zero();
    const auto& ids = batch.ids[f];
    const auto& off = batch.offsets[f];
    for (int i = 0; i < n; ++i) {
      const uint32_t b = off[i], e = off[i + 1];
      double* pr = pooled.row(i);
      if (e == b) continue;
      const double inv = 1.0 / static_cast<double>(e - b);
      for (uint32_t k = b; k < e; ++k) {
        const uint32_t id = ids[k];
        if (id >= static_cast<uint32_t>(t.rows()))
          throw std::runtime_error("data error: entity id " +
                                   std::to_string(id) +
                                   " out of range for table " +
                                   std::to_string(f));
        const double* row = t.table.row(static_cast<int>(id));
        for (int d = 0; d < t.dim(); ++d) pr[d] += row[d];
      }
      for (int d = 0; d < t.dim(); ++d) pr[d] *= inv;
    }
  }

  // pairwise dot interaction over [bottom output, pooled embeddings]
  const int n_vec = cfg.interaction_vectors();
  const int width = cfg.top_input_width();
  cache.interact.resize(n, width);
  std::vector<const double*> vecs(static_cast<size_t>(n_vec));
  const Matrix& v0 = cache.bottom_h.back();
  for (int i = 0; i < n; ++i) {
    vecs[0] = v0.row(i);
    for (int f = 0; f < n_tables; ++f) vecs[f + 1] = cache.pooled[f].row(i);
    dot_interaction_into(vecs.data(), n_vec, cfg.embedding_dim,
                         cache.interact.row(i));
  }

  // top MLP; final layer stays linear and yields the logit
  x = &cache.interact;
  for (int l = 0; l < n_top; ++l) {
    const Matrix& w = forward_weights(model.top[l], cache.eff_top[l]);
    affine_forward(w, fc_bias(model.top[l]), *x, cache.top_z[l]);
    if (l + 1 < n_top) {
      apply_activation(cache.top_z[l], cache.top_h[l], cfg.activation);
      x = &cache.top_h[l];
    }
  }

  cache.logits.resize(static_cast<size_t>(n));
  cache.probs.resize(static_cast<size_t>(n));
  const Matrix& zl = cache.top_z.back();
  for (int i = 0; i < n; ++i) {
    cache.logits[static_cast<size_t>(i)] = zl.at(i, 0);
    cache.probs[static_cast<size_t>(i)] = sigmoid(zl.at(i, 0));
  }
  cache.batch_tag = batch.virtual_time;
  cache.batch_n = n;
  return cache.probs;
}

// --- backward ---

// dW += delta^T x; db += column sums of delta; dx = delta W (optional).
static void affine_backward(const Matrix& delta, const Matrix& x_in,
                            const Matrix& w_eff, Matrix& dw, Vector& db,
                            Matrix* dx) {
  const int n = delta.rows, out = delta.cols, in = x_in.cols;
  for (int i = 0; i < n; ++i) {
    const double* dr = delta.row(i);
    const double* xr = x_in.row(i);
    for (int o = 0; o < out; ++o) {
      const double d = dr[o];
      if (d == 0.0) continue;
      db[o] += d;
      double* wr = dw.row(o);
      for (int k = 0; k < in; ++k) wr[k] += d * xr[k];
    }
  }
  if (dx) {
    dx->resize(n, in);
    for (int i = 0; i < n; ++i) {
      double* dxr = dx->row(i);
      for (int k = 0; k < in; ++k) dxr[k] = 0.0;
      const double* dr = delta.row(i);
      for (int o = 0; o < out; ++o) {
        const double d = dr[o];
        if (d == 0.0) continue;
        const double* wr = w_eff.row(o);
        for (int k = 0; k < in; ++k) dxr[k] += d * wr[k];
      }
    }
  }
}

static void zero_grads(RecModel& model) {
  for (auto& l : model.bottom) {
    fc_grad(l).zero();
    auto& bg = fc_bias_grad(l);
    std::fill(bg.begin(), bg.end(), 0.0);
  }
  for (auto& l : model.top) {
    fc_grad(l).zero();
    auto& bg = fc_bias_grad(l);
    std::fill(bg.begin(), bg.end(), 0.0);
  }
  for (auto& t : model.tables) {
    const size_t dim = static_cast<size_t>(t.dim());
    for (uint32_t r : t.touched) {
      double* g = t.grad.row(r);
      std::fill(g, g + dim, 0.0);
    }
    t.touched.clear();
  }
}

void backward(RecModel& model, const Batch& batch, ForwardCache& cache) {
  if (cache.batch_tag != batch.virtual_time || cache.batch_n != batch.size()) {
    throw std::logic_error(
        "state error: backward called without a matching forward");
  }
  const auto& cfg = model.cfg;
  const int n = batch.size();
  const int n_bottom = static_cast<int>(model.bottom.size());
  const int n_top = static_cast<int>(model.top.size());
  const int n_tables = cfg.num_tables();

  zero_grads(model);
  cache.d_top.resize(n_top);
  cache.d_bottom.resize(n_bottom);
  cache.d_pooled.resize(n_tables);

  // d(mean clamped CE)/d logit = (p - y)/n in the unclamped region, else 0
  Matrix& dlogit = cache.d_top[n_top - 1];
  dlogit.resize(n, 1);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int i = 0; i < n; ++i) {
    const double p = cache.probs[static_cast<size_t>(i)];
    dlogit.at(i, 0) = (p <= kProbClamp || p >= 1.0 - kProbClamp)
                          ? 0.0
                          : (p - batch.labels[static_cast<size_t>(i)]) * inv_n;
  }

  // top MLP
  for (int l = n_top - 1; l >= 0; --l) {
    const Matrix& x_in = (l == 0) ? cache.interact : cache.top_h[l - 1];
    const Matrix& w_eff =
        fc_is_masked(model.top[l]) ? cache.eff_top[l] : fc_weights(model.top[l]);
    Matrix* dx = (l == 0) ? &cache.d_interact : &cache.d_top[l - 1];
    affine_backward(cache.d_top[l], x_in, w_eff, fc_grad(model.top[l]),
                    fc_bias_grad(model.top[l]), dx);
    if (l > 0) {
      Matrix& d = cache.d_top[l - 1];
      const Matrix& z = cache.top_z[l - 1];
      const Matrix& h = cache.top_h[l - 1];
      for (size_t i = 0; i < d.v.size(); ++i)
        d.v[i] *= act_grad(z.v[i], h.v[i], cfg.activation);
    }
  }

  // interaction: route d_interact into the bottom output and pooled vectors
  const int n_vec = cfg.interaction_vectors();
  const int dim = cfg.embedding_dim;
  Matrix& d_v0 = cache.d_bottom[n_bottom - 1];  // starts as d(bottom_h.back())
  d_v0.resize(n, dim);
  d_v0.zero();
  for (int f = 0; f < n_tables; ++f) {
    cache.d_pooled[f].resize(n, dim);
    cache.d_pooled[f].zero();
  }
  std::vector<const double*> vecs(static_cast<size_t>(n_vec));
  std::vector<double*> dvecs(static_cast<size_t>(n_vec));
  for (int i = 0; i < n; ++i) {
    vecs[0] = cache.bottom_h.back().row(i);
    dvecs[0] = d_v0.row(i);
    for (int f = 0; f < n_tables; ++f) {
      vecs[f + 1] = cache.pooled[f].row(i);
      dvecs[f + 1] = cache.d_pooled[f].row(i);
    }
    const double* dout = cache.d_interact.row(i);
    for (int d = 0; d < dim; ++d) dvecs[0][d] += dout[d];
    int k = dim;
    for (int a = 0; a < n_vec; ++a) {
      for (int b = a + 1; b < n_vec; ++b) {
        const double g = dout[k++];
        if (g == 0.0) continue;
        for (int d = 0; d < dim; ++d) {
          dvecs[a][d] += g * vecs[b][d];
          dvecs[b][d] += g * vecs[a][d];
        }
      }
    }
  }

  // embeddings: mean pooling spreads the gradient evenly over looked-up rows
  for (int f = 0; f < n_tables; ++f) {
    EmbeddingTable& t = model.tables[f];
    const auto& ids = batch.ids[f];
    const auto& off = batch.offsets[f];
    std::vector<uint8_t> seen(static_cast<size_t>(t.rows()), 0);
    for (int i = 0; i < n; ++i) {
      const uint32_t b = off[i], e = off[i + 1];
      if (e == b) continue;
      const double inv = 1.0 / static_cast<double>(e - b);
      const double* dp = cache.d_pooled[f].row(i);
      for (uint32_t k = b; k < e; ++k) {
        const uint32_t id = ids[k];
        if (!seen[id]) {
          seen[id] = 1;
          t.touched.push_back(id);
        }
        double* gr = t.grad.row(static_cast<int>(id));
        for (int d = 0; d < dim; ++d) gr[d] += dp[d] * inv;
      }
    }
  }

  // bottom MLP; d_v0 currently holds d(h_last), convert through activation
  {
    Matrix& d = cache.d_bottom[n_bottom - 1];
    const Matrix& z = cache.bottom_z[n_bottom - 1];
    const Matrix& h = cache.bottom_h[n_bottom - 1];
    for (size_t i = 0; i < d.v.size(); ++i)
      d.v[i] *= act_grad(z.v[i], h.v[i], cfg.activation);
  }
  for (int l = n_bottom - 1; l >= 0; --l) {
    const Matrix& x_in = (l == 0) ? batch.dense : cache.bottom_h[l - 1];
    const Matrix& w_eff = fc_is_masked(model.bottom[l]) ? cache.eff_bottom[l]
                                                        : fc_weights(model.bottom[l]);
    Matrix* dx = (l == 0) ? nullptr : &cache.d_bottom[l - 1];
    affine_backward(cache.d_bottom[l], x_in, w_eff, fc_grad(model.bottom[l]),
                    fc_bias_grad(model.bottom[l]), dx);
    if (l > 0) {
      Matrix& d = cache.d_bottom[l - 1];
      const Matrix& z = cache.bottom_z[l - 1];
      const Matrix& h = cache.bottom_h[l - 1];
      for (size_t i = 0; i < d.v.size(); ++i)
        d.v[i] *= act_grad(z.v[i], h.v[i], cfg.activation);
    }
  }
}

// --- optimizer ---

void optimizer_step(RecModel& model) {
  const double lr = model.cfg.lr, eps = model.cfg.adagrad_eps;
  auto step_fc = [&](FcLayer& l) {
    if (auto* d = std::get_if<DenseParam>(&l))
      adagrad_step(*d, lr, eps);
    else
      masked_adagrad_step(std::get<MaskedLayer>(l), lr, eps);
  };
  for (auto& l : model.bottom) step_fc(l);
  for (auto& l : model.top) step_fc(l);
  for (auto& t : model.tables) adagrad_step(t, lr, eps);
}

double train_step(RecModel& model, const Batch& batch, ForwardCache& cache) {
  forward(model, batch, cache);
  const double loss = ce_loss(cache.probs, batch.labels);
  backward(model, batch, cache);
  optimizer_step(model);
  return loss;
}

}  // namespace d2s
