#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ttpx/kernels.hpp"

namespace ttpx::kernels::serial {

void logits(const CsrMatrix& x, std::span<const double> weights, std::span<const double> bias, std::size_t classes,
            std::span<double> out) {
  const std::size_t features = x.cols;
  if (weights.size() != classes * features || bias.size() != classes || out.size() != x.rows() * classes) {
    throw std::invalid_argument("serial::logits: shape mismatch");
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      double z = bias[c];
      for (std::size_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k) {
        z += x.values[k] * weights[c * features + x.indices[k]];
      }
      out[i * classes + c] = z;
    }
  }
}

void gradient_step(const CsrMatrix& x, const ClassTargets& targets, std::span<double> weights, std::span<double> bias,
                   double learning_rate, double l2, std::span<double> losses) {
  const std::size_t classes = targets.classes;
  const std::size_t features = x.cols;
  const std::size_t rows = x.rows();
  if (weights.size() != classes * features || bias.size() != classes || losses.size() != classes ||
      targets.rows != rows) {
    throw std::invalid_argument("serial::gradient_step: shape mismatch");
  }

  std::vector<double> z(rows * classes);
  logits(x, weights, bias, classes, z);

  std::vector<double> grad(features);
  for (std::size_t c = 0; c < classes; ++c) {
    if (!targets.active[c]) {
      losses[c] = 0.0;
      continue;
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double s = targets.sample_weight[c * rows + i];
      const double y = targets.label[c * rows + i] ? 1.0 : 0.0;
      const double zi = z[i * classes + c];
      const double p = 1.0 / (1.0 + std::exp(-zi));
      // -[y log p + (1-y) log(1-p)], written via log-sum-exp for stability.
      loss += s * (std::max(zi, 0.0) + std::log1p(std::exp(-std::abs(zi))) - y * zi);
      grad_b += s * (p - y);
      for (std::size_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k) {
        grad[x.indices[k]] += s * (p - y) * x.values[k];
      }
    }
    double* w = weights.data() + c * features;
    double norm2 = 0.0;
    for (std::size_t j = 0; j < features; ++j) norm2 += w[j] * w[j];
    losses[c] = loss + 0.5 * l2 * norm2;
    for (std::size_t j = 0; j < features; ++j) w[j] -= learning_rate * (grad[j] + l2 * w[j]);
    bias[c] -= learning_rate * grad_b;
  }
}

}  // namespace ttpx::kernels::serial
