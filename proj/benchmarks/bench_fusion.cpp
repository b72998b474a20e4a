#include <benchmark/benchmark.h>

#include <random>

#include "streamfuse/fusion.hpp"

namespace {

std::vector<streamfuse::ScoreMatrix> make_streams(Eigen::Index videos,
                                                  Eigen::Index classes,
                                                  int count) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<streamfuse::ScoreMatrix> streams;
  for (int s = 0; s < count; ++s) {
    streamfuse::ScoreMatrix m;
    m.stream_name = "s" + std::to_string(s);
    m.scores.resize(videos, classes);
    for (Eigen::Index r = 0; r < videos; ++r) {
      double sum = 0.0;
      for (Eigen::Index c = 0; c < classes; ++c) {
        m.scores(r, c) = unit(rng);
        sum += m.scores(r, c);
      }
      m.scores.row(r) /= sum;
      m.video_ids.push_back("v" + std::to_string(r));
    }
    m.normalized = true;
    streams.push_back(std::move(m));
  }
  return streams;
}

void ExecutePlan(benchmark::State& state) {
  const auto streams = make_streams(state.range(0), 200, 5);
  std::vector<streamfuse::StreamMeta> metas;
  for (int s = 0; s < 5; ++s) {
    metas.push_back({"s" + std::to_string(s), 0.5 + 0.05 * s});
  }
  const auto plan = streamfuse::plan_fusion(streams, metas);
  for (auto _ : state) {
    benchmark::DoNotOptimize(streamfuse::execute_plan(plan, streams));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(ExecutePlan)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

}  // namespace
