#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace d2s {

/// Row-major dense matrix of doubles. All model arithmetic runs in f64.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const {
    return v.data() + static_cast<size_t>(r) * cols;
  }

  size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }
  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
  void fill(double x) { std::fill(v.begin(), v.end(), x); }
  void zero() { fill(0.0); }

  // Reshape, discarding contents. No-op on matching shape keeps the buffer.
  void resize(int r, int c) {
    if (rows == r && cols == c) return;
    rows = r;
    cols = c;
    v.assign(static_cast<size_t>(r) * c, 0.0);
  }
};

using Vector = std::vector<double>;

inline double l1_norm(const Matrix& m) {
  double s = 0.0;
  for (double x : m.v) s += std::abs(x);
  return s;
}

inline double l2_norm_sq(const Matrix& m) {
  double s = 0.0;
  for (double x : m.v) s += x * x;
  return s;
}

}  // namespace d2s
