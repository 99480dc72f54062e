#include "d2s/nn/layer.hpp"

#include <cmath>
#include <stdexcept>

namespace d2s {
namespace detail {

void check_lr(double lr) {
  if (!(lr > 0.0)) {
    throw std::invalid_argument(
        "configuration error: learning rate must be positive");
  }
}

void adagrad_update(double* value, const double* grad, double* acc, size_t n,
                    double lr, double eps) {
  for (size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;  // value and accumulator both stay put
    acc[i] += g * g;
    value[i] -= lr * g / (std::sqrt(acc[i]) + eps);
  }
}

}  // namespace detail

void adagrad_step(DenseParam& p, double lr, double eps) {
  detail::check_lr(lr);
  detail::adagrad_update(p.values.v.data(), p.grad.v.data(), p.acc.v.data(),
                         p.values.size(), lr, eps);
  detail::adagrad_update(p.bias.data(), p.bias_grad.data(), p.bias_acc.data(),
                         p.bias.size(), lr, eps);
}

void adagrad_step(EmbeddingTable& t, double lr, double eps) {
  detail::check_lr(lr);
  const size_t dim = static_cast<size_t>(t.dim());
  for (uint32_t r : t.touched) {
    detail::adagrad_update(t.table.row(r), t.grad.row(r), t.acc.row(r), dim,
                           lr, eps);
  }
}

}  // namespace d2s
