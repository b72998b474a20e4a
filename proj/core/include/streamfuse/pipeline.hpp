#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "streamfuse/encoder.hpp"
#include "streamfuse/fusion.hpp"
#include "streamfuse/metrics.hpp"
#include "streamfuse/types.hpp"

namespace streamfuse {

enum class StreamKind { feature_svm, raw_scores };

struct PipelineStreamConfig {
  std::string name;
  StreamKind kind = StreamKind::feature_svm;
  std::filesystem::path features;           // feature_svm: all subsets, one file
  std::filesystem::path validation_scores;  // raw_scores
  std::filesystem::path test_scores;        // raw_scores, optional
  EncoderConfig encoder;
  double svm_c = 1.0;
  std::optional<double> validation_accuracy;  // override for fusion ordering
};

struct PipelineConfig {
  std::filesystem::path manifest_path;
  std::vector<PipelineStreamConfig> streams;
  FusionConfig fusion;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  bool resume = false;  // reuse intermediate files already on disk
  bool quiet = false;
};

// Paths are resolved relative to the config file's directory.
PipelineConfig read_pipeline_config(const std::filesystem::path& path);

struct PipelineResult {
  FusionPlan plan;
  EvalReport validation_report;
  std::vector<StreamMeta> metas;
  std::filesystem::path fused_validation_path;
  std::filesystem::path fused_test_path;  // empty when no test scores exist
};

// Encode -> train -> predict -> fuse -> evaluate, every stage reading its
// input from the previous stage's file so that fresh and --resume runs are
// byte-identical.
PipelineResult run_pipeline(const PipelineConfig& config);

// Config files for the stage-level commands. All paths resolve relative to
// the config file's directory.

struct EncodeCommandConfig {
  std::filesystem::path manifest;
  std::filesystem::path input;
  std::string stream_name;
  EncoderConfig encoder;
};
EncodeCommandConfig read_encode_config(const std::filesystem::path& path);

struct TrainCommandConfig {
  std::filesystem::path manifest;
  std::filesystem::path features;
  std::string stream_name;
  double C = 1.0;
  double tolerance = 1e-3;
  int max_epochs = 1000;
};
TrainCommandConfig read_train_config(const std::filesystem::path& path);

struct PredictCommandConfig {
  std::filesystem::path manifest;
  std::filesystem::path model;
  std::filesystem::path features;
  std::string stream_name;
  Subset subset = Subset::validation;
  bool normalize = true;
};
PredictCommandConfig read_predict_config(const std::filesystem::path& path);

struct FuseStreamRef {
  std::string name;
  std::filesystem::path scores;
  std::optional<double> validation_accuracy;
};
struct FuseCommandConfig {
  std::filesystem::path manifest;
  std::vector<FuseStreamRef> streams;
  FusionConfig fusion;
};
FuseCommandConfig read_fuse_config(const std::filesystem::path& path);

struct EvalCommandConfig {
  std::filesystem::path manifest;
  std::filesystem::path scores;
};
EvalCommandConfig read_eval_config(const std::filesystem::path& path);

}  // namespace streamfuse
