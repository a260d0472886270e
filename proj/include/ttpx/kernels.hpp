#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ttpx {

// Compressed sparse rows; column indices strictly increasing within a row.
struct CsrMatrix {
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t rows() const noexcept { return row_ptr.size() - 1; }
  void append_row(std::span<const std::uint32_t> idx, std::span<const double> vals);
};

// One-vs-rest training targets, class-major: entry [c * rows + i].
struct ClassTargets {
  std::size_t classes = 0;
  std::size_t rows = 0;
  std::vector<std::uint8_t> label;
  std::vector<double> sample_weight;  // per class, sums to 1 over rows
  std::vector<std::uint8_t> active;   // per class; inactive classes are skipped
};

// Weights are class-major: weights[c * features + j].
namespace kernels {

// out[i * classes + c] = x_i . w_c + b_c. Rows in parallel.
void logits(const CsrMatrix& x, std::span<const double> weights, std::span<const double> bias, std::size_t classes,
            std::span<double> out);

// Weighted logistic loss of one class plus (l2/2)|w|^2, with its gradient.
double class_loss_gradient(const CsrMatrix& x, std::span<const std::uint8_t> label, std::span<const double> sample_weight,
                           std::span<const double> w, double b, double l2, std::span<double> grad_w, double& grad_b);

// One full-batch gradient step for every active class (classes in parallel).
// `losses[c]` receives the loss before the step.
void gradient_step(const CsrMatrix& x, const ClassTargets& targets, std::span<double> weights, std::span<double> bias,
                   double learning_rate, double l2, std::span<double> losses);

int max_threads() noexcept;

}  // namespace kernels

// Straightforward single-threaded versions, kept as the reference the
// parallel kernels are tested and benchmarked against.
namespace kernels::serial {

void logits(const CsrMatrix& x, std::span<const double> weights, std::span<const double> bias, std::size_t classes,
            std::span<double> out);

void gradient_step(const CsrMatrix& x, const ClassTargets& targets, std::span<double> weights, std::span<double> bias,
                   double learning_rate, double l2, std::span<double> losses);

}  // namespace kernels::serial

}  // namespace ttpx
