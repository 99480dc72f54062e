#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "d2s/nn/loss.hpp"
#include "d2s/nn/model.hpp"
#include "d2s/stream/stream.hpp"

namespace d2s_test {

using namespace d2s;

/// Small topology that exercises every moving part yet keeps brute-force
/// oracles fast: 3 dense features, one bottom layer, two tables, two top
/// layers.
inline ModelConfig toy_model_config() {
  ModelConfig cfg;
  cfg.dense_dim = 3;
  cfg.bottom_mlp = {4};
  cfg.embedding_rows = {10, 12};
  cfg.embedding_dim = 4;
  cfg.top_mlp = {5, 1};
  cfg.lr = 0.05;
  return cfg;
}

inline StreamConfig toy_stream_config() {
  StreamConfig cfg;
  cfg.dense_dim = 3;
  cfg.table_rows = {10, 12};
  cfg.multiplicity = {1, 2};
  cfg.batch_size = 16;
  cfg.teacher_embedding_dim = 4;
  cfg.teacher_bottom = {4};
  cfg.teacher_top = {6, 1};
  cfg.seed = 500;
  return cfg;
}

inline DriftSchedule toy_drift() {
  DriftSchedule d;
  d.anchor_times = {0, 1000, 2000};
  d.drift_magnitude = 0.3;
  d.popularity_drift = 0.2;
  d.seed = 77;
  return d;
}

/// Hand-built batch for exact-value tests.
inline Batch make_batch(const Matrix& dense,
                        const std::vector<std::vector<std::vector<uint32_t>>>&
                            per_example_ids,  // [table][example][ids]
                        const Vector& labels, uint64_t t = 0) {
  Batch b;
  b.dense = dense;
  b.labels = labels;
  b.virtual_time = t;
  const int n = dense.rows;
  b.ids.resize(per_example_ids.size());
  b.offsets.resize(per_example_ids.size());
  for (size_t f = 0; f < per_example_ids.size(); ++f) {
    b.offsets[f].assign(static_cast<size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) {
      for (uint32_t id : per_example_ids[f][static_cast<size_t>(i)])
        b.ids[f].push_back(id);
      b.offsets[f][static_cast<size_t>(i) + 1] =
          static_cast<uint32_t>(b.ids[f].size());
    }
  }
  return b;
}

inline void zero_model(RecModel& m) {
  auto zero_fc = [](FcLayer& l) {
    fc_weights(l).zero();
    auto& b = fc_bias(l);
    std::fill(b.begin(), b.end(), 0.0);
  };
  for (auto& l : m.bottom) zero_fc(l);
  for (auto& l : m.top) zero_fc(l);
  for (auto& t : m.tables) t.table.zero();
}

// --- finite-difference gradient oracle (independent of backward) ---

struct ParamRef {
  double* value;
  double analytic;
};

inline std::vector<ParamRef> collect_params(RecModel& m) {
  std::vector<ParamRef> out;
  auto add_fc = [&](FcLayer& l) {
    if (auto* d = std::get_if<DenseParam>(&l)) {
      for (size_t i = 0; i < d->values.size(); ++i)
        out.push_back({&d->values.v[i], d->grad.v[i]});
      for (size_t i = 0; i < d->bias.size(); ++i)
        out.push_back({&d->bias[i], d->bias_grad[i]});
    } else {
      auto& ml = std::get<MaskedLayer>(l);
      for (size_t i = 0; i < ml.theta.size(); ++i)
        out.push_back({&ml.theta.v[i],
                       ml.aux.v[i] > 0.0 ? ml.grad_masked.v[i] : 0.0});
      for (size_t i = 0; i < ml.bias.size(); ++i)
        out.push_back({&ml.bias[i], ml.bias_grad[i]});
    }
  };
  for (auto& l : m.bottom) add_fc(l);
  for (auto& l : m.top) add_fc(l);
  for (auto& t : m.tables)
    for (size_t i = 0; i < t.table.size(); ++i)
      out.push_back({&t.table.v[i], t.grad.v[i]});
  return out;
}

struct FdReport {
  double max_rel_err = 0.0;
  size_t checked = 0;
};

/// Central differences with step h against the gradients left in the model
/// by backward(). Relative error uses a small absolute floor so that
/// noise-level gradients do not divide by ~0.
inline FdReport fd_gradient_check(RecModel& model, const Batch& batch,
                                  double h = 1e-4) {
  ForwardCache cache;
  forward(model, batch, cache);
  backward(model, batch, cache);
  std::vector<ParamRef> params = collect_params(model);
  ForwardCache scratch;
  FdReport rep;
  rep.checked = params.size();
  for (auto& p : params) {
    const double saved = *p.value;
    *p.value = saved + h;
    const double lp = ce_loss(forward(model, batch, scratch), batch.labels);
    *p.value = saved - h;
    const double lm = ce_loss(forward(model, batch, scratch), batch.labels);
    *p.value = saved;
    const double fd = (lp - lm) / (2.0 * h);
    const double denom =
        std::max({std::abs(fd), std::abs(p.analytic), 1e-4});
    rep.max_rel_err =
        std::max(rep.max_rel_err, std::abs(fd - p.analytic) / denom);
  }
  return rep;
}

/// Smallest |pre-activation| across both MLPs; keeps the FD oracle away
/// from ReLU kinks for the chosen seed.
inline double min_abs_preactivation(const RecModel& model, const Batch& batch) {
  ForwardCache cache;
  forward(model, batch, cache);
  double m = 1e300;
  for (const auto& z : cache.bottom_z)
    for (double v : z.v) m = std::min(m, std::abs(v));
  for (const auto& z : cache.top_z)
    for (double v : z.v) m = std::min(m, std::abs(v));
  return m;
}

}  // namespace d2s_test
