#pragma once

#include "d2s/tensor.hpp"

namespace d2s {

/// Clamp distance from {0, 1} that keeps the cross-entropy finite.
inline constexpr double kProbClamp = 1e-7;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double clamp_prob(double p) {
  if (p < kProbClamp) return kProbClamp;
  if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return p;
}

/// Mean binary cross-entropy, probabilities clamped to [1e-7, 1 - 1e-7].
/// Throws on length mismatch.
double ce_loss(const Vector& probs, const Vector& labels);

/// Sum of per-example CE terms (same clamping); used by windowed evaluation
/// so that window means decompose exactly by construction.
double ce_sum(const Vector& probs, const Vector& labels);

}  // namespace d2s
