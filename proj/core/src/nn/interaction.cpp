#include "d2s/nn/interaction.hpp"

#include <stdexcept>

namespace d2s {

void dot_interaction_into(const double* const* vecs, int n_vec, int dim,
                          double* out) {
  for (int d = 0; d < dim; ++d) out[d] = vecs[0][d];
  int k = dim;
  for (int i = 0; i < n_vec; ++i) {
    for (int j = i + 1; j < n_vec; ++j) {
      const double* a = vecs[i];
      const double* b = vecs[j];
      double s = 0.0;
      for (int d = 0; d < dim; ++d) s += a[d] * b[d];
      out[k++] = s;
    }
  }
}

Vector dot_interaction(const std::vector<Vector>& vectors) {
  if (vectors.size() < 2) {
    throw std::invalid_argument(
        "configuration error: interaction needs at least 2 vectors");
  }
  const size_t dim = vectors[0].size();
  std::vector<const double*> ptrs;
  ptrs.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.size() != dim) {
      throw std::invalid_argument(
          "configuration error: interaction vectors must have equal length");
    }
    ptrs.push_back(v.data());
  }
  const int n = static_cast<int>(vectors.size());
  Vector out(interaction_width(static_cast<int>(dim), n));
  dot_interaction_into(ptrs.data(), n, static_cast<int>(dim), out.data());
  return out;
}

}  // namespace d2s
