#include "d2s/prune/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "d2s/nn/loss.hpp"

namespace d2s {

void PruneConfig::validate() const {
  if (lambda < 0.0)
    throw std::invalid_argument("configuration error: lambda must be >= 0");
  if (w1 < 0.0 || w2 < 0.0)
    throw std::invalid_argument(
        "configuration error: criterion weights must be >= 0");
  if (!(aux_lr > 0.0))
    throw std::invalid_argument("configuration error: aux_lr must be > 0");
  if (!(target_sparsity >= 0.0 && target_sparsity < 1.0))
    throw std::invalid_argument(
        "configuration error: target_sparsity must be in [0, 1)");
  if (!(momentum_decay > 0.0 && momentum_decay < 1.0))
    throw std::invalid_argument(
        "configuration error: momentum_decay must be in (0, 1)");
  if (algorithm == Algo::kMomentum && w1 + w2 <= 0.0)
    throw std::invalid_argument(
        "configuration error: MoP needs w1 + w2 > 0");
  if (signed_taylor && rescale)
    throw std::invalid_argument(
        "configuration error: the vanilla signed rule has no rescaling");
}

void apply_mask_into(const MaskedLayer& l, Matrix& out) {
  out.resize(l.theta.rows, l.theta.cols);
  for (size_t i = 0; i < l.theta.size(); ++i)
    out.v[i] = l.aux.v[i] > 0.0 ? l.theta.v[i] : 0.0;
}

Matrix apply_mask(const MaskedLayer& l) {
  Matrix out;
  apply_mask_into(l, out);
  return out;
}

static void check_shape(const MaskedLayer& l, const Matrix& g) {
  if (!g.same_shape(l.theta))
    throw std::invalid_argument(
        "configuration error: gradient shape does not match the layer");
}

ImportanceScore taylor_scores(const MaskedLayer& l, const Matrix& grad_masked) {
  check_shape(l, grad_masked);
  ImportanceScore s;
  s.criterion = ImportanceScore::Criterion::kTaylor;
  s.scores.resize(l.theta.rows, l.theta.cols);
  for (size_t i = 0; i < l.theta.size(); ++i)
    s.scores.v[i] = std::abs(grad_masked.v[i] * l.theta.v[i]);
  return s;
}

ImportanceScore magnitude_scores(const MaskedLayer& l) {
  ImportanceScore s;
  s.criterion = ImportanceScore::Criterion::kMagnitude;
  s.scores.resize(l.theta.rows, l.theta.cols);
  for (size_t i = 0; i < l.theta.size(); ++i)
    s.scores.v[i] = std::abs(l.theta.v[i]);
  return s;
}

void aux_step(MaskedLayer& l, const Matrix& grad_masked,
              const PruneConfig& cfg) {
  check_shape(l, grad_masked);
  const double step = cfg.aux_lr;
  double n1 = 0.0, n2 = 0.0;
  if (cfg.rescale) {
    for (size_t i = 0; i < l.theta.size(); ++i)
      n1 += std::abs(grad_masked.v[i] * l.theta.v[i]);
    n2 = l1_norm(l.theta);
  }
  const bool relu_ste = cfg.ste == PruneConfig::Ste::kRelu;
  for (size_t i = 0; i < l.aux.size(); ++i) {
    if (relu_ste && l.aux.v[i] <= 0.0) continue;
    double g1;
    if (cfg.signed_taylor) {
      g1 = grad_masked.v[i] * l.theta.v[i];
    } else {
      const double t = std::abs(grad_masked.v[i] * l.theta.v[i]);
      g1 = cfg.rescale ? (n1 > 0.0 ? -t / n1 : 0.0) : -t;
    }
    const double m = std::abs(l.theta.v[i]);
    const double g2 = cfg.rescale ? (n2 > 0.0 ? -m / n2 : 0.0) : -m;
    l.aux.v[i] -= step * (cfg.w1 * g1 + cfg.w2 * g2 + cfg.lambda);
  }
}

double mp_ratio_at(uint64_t step, const PruneConfig& cfg) {
  if (cfg.prune_phase_samples == 0) return cfg.target_sparsity;
  const double ramp = cfg.target_sparsity * static_cast<double>(step) /
                      static_cast<double>(cfg.prune_phase_samples);
  return std::min(cfg.target_sparsity, ramp);
}

void rank_prune(MaskedLayer& l, const ImportanceScore& scores, double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0))
    throw std::invalid_argument(
        "configuration error: prune ratio must be in [0, 1)");
  if (!scores.scores.same_shape(l.aux))
    throw std::invalid_argument(
        "configuration error: score shape does not match the layer");
  const size_t n = l.aux.size();
  const double x = ratio * static_cast<double>(n);
  size_t m = static_cast<size_t>(std::floor(x));
  if (x - static_cast<double>(m) > 1.0 - 1e-9) ++m;  // representation slack
  std::vector<uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  const auto& s = scores.scores.v;
  std::sort(idx.begin(), idx.end(), [&](uint32_t a, uint32_t b) {
    if (s[a] != s[b]) return s[a] < s[b];
    return a < b;
  });
  for (size_t k = 0; k < n; ++k) l.aux.v[idx[k]] = k < m ? -1.0 : 1.0;
}

void momentum_update(MaskedLayer& l, const Matrix& grad_masked, double decay) {
  check_shape(l, grad_masked);
  if (!(decay > 0.0 && decay < 1.0))
    throw std::invalid_argument(
        "configuration error: momentum decay must be in (0, 1)");
  const double innov = 1.0 - decay;
  for (size_t i = 0; i < l.momentum.size(); ++i)
    l.momentum.v[i] = decay * l.momentum.v[i] + innov * grad_masked.v[i];
}

ImportanceScore mop_importance(const MaskedLayer& l, double w1, double w2) {
  if (w1 + w2 <= 0.0)
    throw std::invalid_argument("configuration error: MoP needs w1 + w2 > 0");
  ImportanceScore s;
  s.criterion = ImportanceScore::Criterion::kMop;
  s.scores.resize(l.theta.rows, l.theta.cols);
  const double n1 = l1_norm(l.theta);
  const double n2 = l1_norm(l.momentum);  // zero mass drops the term
  for (size_t i = 0; i < l.theta.size(); ++i) {
    double v = 0.0;
    if (n1 > 0.0) v += w1 * std::abs(l.theta.v[i]) / n1;
    if (n2 > 0.0) v += w2 * std::abs(l.momentum.v[i]) / n2;
    s.scores.v[i] = v;
  }
  return s;
}

void mop_refresh(MaskedLayer& l, const PruneConfig& cfg) {
  rank_prune(l, mop_importance(l, cfg.w1, cfg.w2), cfg.target_sparsity);
}

void masked_adagrad_step(MaskedLayer& l, double lr, double eps) {
  detail::check_lr(lr);
  for (size_t i = 0; i < l.theta.size(); ++i) {
    if (l.aux.v[i] <= 0.0) continue;  // pruned entries never move
    const double g = l.grad_masked.v[i];
    if (g == 0.0) continue;
    l.theta_acc.v[i] += g * g;
    l.theta.v[i] -= lr * g / (std::sqrt(l.theta_acc.v[i]) + eps);
  }
  detail::adagrad_update(l.bias.data(), l.bias_grad.data(), l.bias_acc.data(),
                         l.bias.size(), lr, eps);
}

double finetune_step_fixed_mask(RecModel& model, const Batch& batch,
                                ForwardCache& cache) {
  return train_step(model, batch, cache);
}

double prune_phase_step(RecModel& model, const Batch& batch,
                        ForwardCache& cache, const PruneConfig& cfg,
                        uint64_t samples_into_phase) {
  forward(model, batch, cache);
  const double loss = ce_loss(cache.probs, batch.labels);
  backward(model, batch, cache);
  switch (cfg.algorithm) {
    case PruneConfig::Algo::kAux:
      for_each_masked(model,
                      [&](MaskedLayer& l) { aux_step(l, l.grad_masked, cfg); });
      break;
    case PruneConfig::Algo::kMagnitude: {
      const double ratio = mp_ratio_at(samples_into_phase, cfg);
      for_each_masked(model, [&](MaskedLayer& l) {
        rank_prune(l, magnitude_scores(l), ratio);
      });
      break;
    }
    case PruneConfig::Algo::kTaylor: {
      const double ratio = mp_ratio_at(samples_into_phase, cfg);
      for_each_masked(model, [&](MaskedLayer& l) {
        rank_prune(l, taylor_scores(l, l.grad_masked), ratio);
      });
      break;
    }
    case PruneConfig::Algo::kMomentum: {
      const double ratio = mp_ratio_at(samples_into_phase, cfg);
      for_each_masked(model, [&](MaskedLayer& l) {
        momentum_update(l, l.grad_masked, cfg.momentum_decay);
        rank_prune(l, mop_importance(l, cfg.w1, cfg.w2), ratio);
      });
      break;
    }
  }
  optimizer_step(model);
  return loss;
}

int64_t pruned_count(const MaskedLayer& l) {
  int64_t c = 0;
  for (double a : l.aux.v)
    if (a <= 0.0) ++c;
  return c;
}

double sparsity(const MaskedLayer& l) {
  if (l.aux.empty()) return 0.0;
  return static_cast<double>(pruned_count(l)) /
         static_cast<double>(l.aux.size());
}

double sparsity(const RecModel& model) {
  int64_t pruned = 0, total = 0;
  for_each_masked(model, [&](const MaskedLayer& l) {
    pruned += pruned_count(l);
    total += static_cast<int64_t>(l.aux.size());
  });
  return total == 0 ? 0.0
                    : static_cast<double>(pruned) / static_cast<double>(total);
}

std::vector<double> per_layer_sparsity(const RecModel& model) {
  std::vector<double> out;
  for_each_masked(model,
                  [&](const MaskedLayer& l) { out.push_back(sparsity(l)); });
  return out;
}

std::vector<uint8_t> mask_bits(const RecModel& model) {
  std::vector<uint8_t> bits;
  for_each_masked(model, [&](const MaskedLayer& l) {
    for (double a : l.aux.v) bits.push_back(a > 0.0 ? 1 : 0);
  });
  return bits;
}

}  // namespace d2s
