#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "streamfuse/types.hpp"

namespace streamfuse {

struct SynthStreamSpec {
  std::string name;
  Eigen::Index dim = 8;
  double target_accuracy = 0.5;  // in [1/K, 1]
  std::uint64_t noise_seed = 0;
};

// Desk-scale analogue of a multi-stream benchmark: per stream, score
// matrices whose validation top-1 hits the target exactly (up to count
// rounding), with error sets shared across streams according to
// `complementarity` (1 = identical error sets, 0 = independent).
struct SynthSpec {
  Eigen::Index num_classes = 2;
  std::vector<std::string> class_names;  // generated when empty
  std::int64_t train_videos = 0;
  std::int64_t validation_videos = 0;
  std::int64_t test_videos = 0;
  std::vector<SynthStreamSpec> streams;
  double complementarity = 0.0;
  std::uint64_t seed = 0;
};

SynthSpec read_synth_spec(const std::filesystem::path& path);

struct SyntheticStream {
  std::string name;
  ScoreMatrix validation_scores;
  ScoreMatrix test_scores;
  FeatureSet features;  // video-level rows for every subset
  StreamMeta meta;      // realized validation accuracy
};

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<SyntheticStream> streams;
};

SyntheticDataset generate_synthetic(const SynthSpec& spec);

}  // namespace streamfuse
