// OpenMP kernels against the serial reference on a TF-IDF-shaped problem.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ttpx/kernels.hpp"

using namespace ttpx;

namespace {

struct Problem {
  CsrMatrix x;
  ClassTargets targets;
  std::vector<double> weights, bias;
};

Problem make_problem(std::size_t rows, std::size_t cols, std::size_t classes) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Problem p;
  p.x.cols = cols;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
    // ~20 terms per sentence
    for (std::size_t c = 0; c < cols; ++c) {
      if (rng() % (cols / 20) == 0) idx.push_back(static_cast<std::uint32_t>(c)), val.push_back(u(rng));
    }
    p.x.append_row(idx, val);
  }
  p.targets.classes = classes;
  p.targets.rows = rows;
  p.targets.label.resize(classes * rows);
  p.targets.sample_weight.assign(classes * rows, 1.0 / rows);
  p.targets.active.assign(classes, 1);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < rows; ++i) p.targets.label[c * rows + i] = i % classes == c;
  }
  p.weights.assign(classes * cols, 0.01);
  p.bias.assign(classes, 0.0);
  return p;
}

template <auto Fn>
void logits_bench(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)), 4000, 50);
  std::vector<double> out(p.x.rows() * 50);
  for (auto _ : state) {
    Fn(p.x, p.weights, p.bias, 50, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void step_bench(benchmark::State& state) {
  auto p = make_problem(static_cast<std::size_t>(state.range(0)), 4000, 50);
  std::vector<double> losses(50);
  for (auto _ : state) {
    Fn(p.x, p.targets, p.weights, p.bias, 0.5, 1e-4, losses);
    benchmark::DoNotOptimize(losses.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(logits_bench<kernels::serial::logits>)->Name("logits/serial")->Arg(500)->Arg(2000);
BENCHMARK(logits_bench<kernels::logits>)->Name("logits/omp")->Arg(500)->Arg(2000);
BENCHMARK(step_bench<kernels::serial::gradient_step>)->Name("gradient_step/serial")->Arg(500)->Arg(2000);
BENCHMARK(step_bench<kernels::gradient_step>)->Name("gradient_step/omp")->Arg(500)->Arg(2000);

BENCHMARK_MAIN();
