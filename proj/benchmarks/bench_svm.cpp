#include <benchmark/benchmark.h>

#include <random>

#include "streamfuse/svm.hpp"

namespace {

void SvmTrain(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::Index d = 64;
  const int k = 8;
  std::mt19937_64 rng(3);
  std::normal_distribution<float> gauss(0.0f, 1.0f);

  Eigen::MatrixXf x(n, d);
  std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
  std::vector<std::string> classes;
  for (int c = 0; c < k; ++c) classes.push_back("c" + std::to_string(c));
  for (Eigen::Index i = 0; i < n; ++i) {
    labels[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i % k);
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = gauss(rng);
    x(i, labels[static_cast<std::size_t>(i)] % d) += 2.0f;
  }

  streamfuse::SvmConfig config;
  config.C = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(streamfuse::svm_train(x, labels, classes, config));
  }
  state.SetComplexityN(n);
}
BENCHMARK(SvmTrain)->RangeMultiplier(2)->Range(64, 512)->Complexity();

}  // namespace
