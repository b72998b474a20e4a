#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "streamfuse/types.hpp"

namespace streamfuse {

struct FusionConfig {
  // The more accurate operand of every pair gets this multiple of the
  // other's weight.
  double weight_ratio = 2.0;
  // Non-empty = fuse in exactly this order; empty = sort streams by
  // validation accuracy, descending (ties by stream_name).
  std::vector<std::string> explicit_order;
};

struct FusionStep {
  std::string left;   // running result after the first step
  std::string right;
  double left_weight = 2.0;
  double right_weight = 1.0;
  std::string result;
};

// Audit record of the exact fold: which stream enters when, with what
// weight. A single stream yields an empty step list (passthrough).
struct FusionPlan {
  std::vector<StreamMeta> order;
  std::vector<FusionStep> steps;
};

FusionPlan plan_fusion(const std::vector<ScoreMatrix>& streams,
                       const std::vector<StreamMeta>& metas,
                       const FusionConfig& config = {});

// Elementwise (w1*s1 + w2*s2) / (w1+w2); requires identical video id
// sequences and class counts.
ScoreMatrix fuse_pair(const ScoreMatrix& s1, const ScoreMatrix& s2, double w1,
                      double w2);

ScoreMatrix execute_plan(const FusionPlan& plan,
                         const std::vector<ScoreMatrix>& streams);

void write_plan(const FusionPlan& plan, const std::filesystem::path& path);

}  // namespace streamfuse
