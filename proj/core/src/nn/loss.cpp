#include "d2s/nn/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace d2s {

double ce_sum(const Vector& probs, const Vector& labels) {
  if (probs.size() != labels.size()) {
    throw std::runtime_error("data error: probs/labels length mismatch");
  }
  double s = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    const double p = clamp_prob(probs[i]);
    const double y = labels[i];
    s -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return s;
}

double ce_loss(const Vector& probs, const Vector& labels) {
  if (probs.empty()) {
    throw std::runtime_error("data error: cross-entropy over an empty batch");
  }
  return ce_sum(probs, labels) / static_cast<double>(probs.size());
}

}  // namespace d2s
