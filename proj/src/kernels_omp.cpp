#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "omp_compat.hpp"
#include "ttpx/kernels.hpp"

namespace ttpx {

void CsrMatrix::append_row(std::span<const std::uint32_t> idx, std::span<const double> vals) {
  if (idx.size() != vals.size()) throw std::invalid_argument("CsrMatrix::append_row: size mismatch");
  indices.insert(indices.end(), idx.begin(), idx.end());
  values.insert(values.end(), vals.begin(), vals.end());
  row_ptr.push_back(indices.size());
}

namespace kernels {

namespace {

// log(1 + e^z) without overflow.
inline double softplus(double z) noexcept { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double row_dot(const CsrMatrix& x, std::size_t i, const double* w) noexcept {
  double acc = 0.0;
  for (std::size_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k) acc += x.values[k] * w[x.indices[k]];
  return acc;
}

void check_shapes(const CsrMatrix& x, std::size_t classes, std::size_t weights, std::size_t bias) {
  if (weights != classes * x.cols || bias != classes) throw std::invalid_argument("kernel: weight/bias shape mismatch");
}

}  // namespace

int max_threads() noexcept { return omp_get_max_threads(); }

void logits(const CsrMatrix& x, std::span<const double> weights, std::span<const double> bias, std::size_t classes,
            std::span<double> out) {
  check_shapes(x, classes, weights.size(), bias.size());
  if (out.size() != x.rows() * classes) throw std::invalid_argument("logits: output shape mismatch");
  const auto rows = static_cast<std::ptrdiff_t>(x.rows());
  const std::size_t features = x.cols;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto row = static_cast<std::size_t>(i);
    for (std::size_t c = 0; c < classes; ++c) {
      out[row * classes + c] = row_dot(x, row, weights.data() + c * features) + bias[c];
    }
  }
}

double class_loss_gradient(const CsrMatrix& x, std::span<const std::uint8_t> label, std::span<const double> sample_weight,
                           std::span<const double> w, double b, double l2, std::span<double> grad_w, double& grad_b) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_b = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double s = sample_weight[i];
    if (s == 0.0) continue;
    const double z = row_dot(x, i, w.data()) + b;
    const double y = label[i] ? 1.0 : 0.0;
    loss += s * (softplus(z) - y * z);
    const double g = s * (sigmoid(z) - y);
    grad_b += g;
    for (std::size_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k) grad_w[x.indices[k]] += g * x.values[k];
  }
  double norm2 = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    norm2 += w[j] * w[j];
    grad_w[j] += l2 * w[j];
  }
  return loss + 0.5 * l2 * norm2;
}

void gradient_step(const CsrMatrix& x, const ClassTargets& targets, std::span<double> weights, std::span<double> bias,
                   double learning_rate, double l2, std::span<double> losses) {
  const std::size_t classes = targets.classes;
  check_shapes(x, classes, weights.size(), bias.size());
  if (targets.rows != x.rows() || losses.size() != classes) throw std::invalid_argument("gradient_step: shape mismatch");
  const std::size_t features = x.cols;
  const std::size_t rows = x.rows();

#pragma omp parallel
  {
    std::vector<double> grad(features);
#pragma omp for schedule(dynamic, 1)
    for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(classes); ++cc) {
      const auto c = static_cast<std::size_t>(cc);
      if (!targets.active[c]) {
        losses[c] = 0.0;
        continue;
      }
      auto w = weights.subspan(c * features, features);
      double grad_b = 0.0;
      losses[c] = class_loss_gradient(x, std::span(targets.label).subspan(c * rows, rows),
                                      std::span(targets.sample_weight).subspan(c * rows, rows), w, bias[c], l2, grad,
                                      grad_b);
      for (std::size_t j = 0; j < features; ++j) w[j] -= learning_rate * grad[j];
      bias[c] -= learning_rate * grad_b;
    }
  }
}

}  // namespace kernels
}  // namespace ttpx
