#pragma once

#include <vector>

#include "d2s/tensor.hpp"

namespace d2s {

/// Output width of the pairwise dot interaction over n_vec vectors of
/// length dim: the first vector passes through, followed by one dot per
/// unordered pair (self-pairs excluded).
inline int interaction_width(int dim, int n_vec) {
  return dim + n_vec * (n_vec - 1) / 2;
}

/// Core kernel: out = [vecs[0], dot(v_i, v_j) for i < j in (i, j) order].
/// All vectors must have length dim; out must have interaction_width slots.
void dot_interaction_into(const double* const* vecs, int n_vec, int dim,
                          double* out);

/// Convenience wrapper over whole vectors. Requires >= 2 vectors of equal
/// length; throws otherwise.
Vector dot_interaction(const std::vector<Vector>& vectors);

}  // namespace d2s
