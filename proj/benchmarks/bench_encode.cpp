#include <benchmark/benchmark.h>

#include <random>

#include "streamfuse/kmeans.hpp"
#include "streamfuse/pca.hpp"
#include "streamfuse/vlad.hpp"

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = gauss(rng);
  }
  return m;
}

void VladEncode(benchmark::State& state) {
  const auto descriptors = random_matrix(state.range(0), 32, 11);
  streamfuse::Codebook codebook{random_matrix(64, 32, 12)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(streamfuse::vlad_k_encode(descriptors, codebook, 5));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(VladEncode)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void PcaFit(benchmark::State& state) {
  const auto data = random_matrix(state.range(0), 128, 13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(streamfuse::pca_fit(data, 32));
  }
}
BENCHMARK(PcaFit)->Arg(256)->Arg(1024);

void KmeansFit(benchmark::State& state) {
  const auto data = random_matrix(state.range(0), 16, 17);
  for (auto _ : state) {
    benchmark::DoNotOptimize(streamfuse::kmeans_fit(data, 32, 1));
  }
}
BENCHMARK(KmeansFit)->Arg(512)->Arg(2048);

}  // namespace
