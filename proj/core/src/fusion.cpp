#include "streamfuse/fusion.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "streamfuse/errors.hpp"

namespace streamfuse {

using nlohmann::json;

namespace {

void check_aligned(const ScoreMatrix& a, const ScoreMatrix& b) {
  if (a.scores.cols() != b.scores.cols()) {
    raise(ErrorCode::alignment_mismatch,
          "streams '" + a.stream_name + "' and '" + b.stream_name +
              "' disagree on class count");
  }
  if (a.video_ids != b.video_ids) {
    raise(ErrorCode::alignment_mismatch,
          "streams '" + a.stream_name + "' and '" + b.stream_name +
              "' cover different video sequences");
  }
}

}  // namespace

FusionPlan plan_fusion(const std::vector<ScoreMatrix>& streams,
                       const std::vector<StreamMeta>& metas,
                       const FusionConfig& config) {
  if (streams.empty()) {
    raise(ErrorCode::missing_data, "plan_fusion got no streams");
  }
  if (streams.size() != metas.size()) {
    raise(ErrorCode::alignment_mismatch, "one StreamMeta per stream required");
  }
  if (config.weight_ratio <= 0.0) {
    raise(ErrorCode::usage, "fusion weight_ratio must be > 0");
  }
  for (std::size_t i = 1; i < streams.size(); ++i) {
    check_aligned(streams[0], streams[i]);
  }

  std::unordered_map<std::string, StreamMeta> by_name;
  for (const auto& meta : metas) {
    if (!by_name.emplace(meta.stream_name, meta).second) {
      raise(ErrorCode::alignment_mismatch,
            "duplicate stream name '" + meta.stream_name + "'");
    }
  }
  for (const auto& stream : streams) {
    if (!by_name.count(stream.stream_name)) {
      raise(ErrorCode::alignment_mismatch,
            "no StreamMeta for stream '" + stream.stream_name + "'");
    }
  }

  FusionPlan plan;
  if (!config.explicit_order.empty()) {
    if (config.explicit_order.size() != streams.size()) {
      raise(ErrorCode::usage, "explicit order must list every stream exactly once");
    }
    for (const auto& name : config.explicit_order) {
      auto it = by_name.find(name);
      if (it == by_name.end()) {
        raise(ErrorCode::usage, "explicit order names unknown stream '" + name + "'");
      }
      plan.order.push_back(it->second);
      by_name.erase(it);  // also catches duplicates in the list
    }
  } else {
    for (const auto& meta : metas) plan.order.push_back(meta);
    std::sort(plan.order.begin(), plan.order.end(),
              [](const StreamMeta& a, const StreamMeta& b) {
                if (a.validation_accuracy != b.validation_accuracy) {
                  return a.validation_accuracy > b.validation_accuracy;
                }
                return a.stream_name < b.stream_name;
              });
  }

  // First step fuses the top two; every later step fuses the running
  // result (more accurate side, weight ratio) with the next stream.
  std::string running = plan.order.front().stream_name;
  for (std::size_t i = 1; i < plan.order.size(); ++i) {
    FusionStep step;
    step.left = running;
    step.right = plan.order[i].stream_name;
    step.left_weight = config.weight_ratio;
    step.right_weight = 1.0;
    step.result = running + "+" + plan.order[i].stream_name;
    running = step.result;
    plan.steps.push_back(std::move(step));
  }
  return plan;
}

ScoreMatrix fuse_pair(const ScoreMatrix& s1, const ScoreMatrix& s2, double w1,
                      double w2) {
  if (w1 <= 0.0 || w2 <= 0.0) {
    raise(ErrorCode::usage, "fuse_pair weights must be positive");
  }
  check_aligned(s1, s2);

  ScoreMatrix out;
  out.stream_name = s1.stream_name + "+" + s2.stream_name;
  out.video_ids = s1.video_ids;
  out.scores = (w1 * s1.scores + w2 * s2.scores) / (w1 + w2);
  out.normalized = s1.normalized && s2.normalized;
  return out;
}

ScoreMatrix execute_plan(const FusionPlan& plan,
                         const std::vector<ScoreMatrix>& streams) {
  if (plan.order.empty()) {
    raise(ErrorCode::missing_data, "empty fusion plan");
  }
  std::unordered_map<std::string, const ScoreMatrix*> by_name;
  for (const auto& stream : streams) by_name[stream.stream_name] = &stream;
  for (const auto& meta : plan.order) {
    if (!by_name.count(meta.stream_name)) {
      raise(ErrorCode::alignment_mismatch,
            "plan names stream '" + meta.stream_name + "' that was not provided");
    }
  }
  if (plan.order.size() != streams.size()) {
    raise(ErrorCode::alignment_mismatch,
          "plan covers " + std::to_string(plan.order.size()) + " streams, got " +
              std::to_string(streams.size()));
  }

  ScoreMatrix running = *by_name.at(plan.order.front().stream_name);
  for (const auto& step : plan.steps) {
    if (step.left != running.stream_name) {
      raise(ErrorCode::alignment_mismatch,
            "plan step expects running result '" + step.left + "', have '" +
                running.stream_name + "'");
    }
    running = fuse_pair(running, *by_name.at(step.right), step.left_weight,
                        step.right_weight);
  }
  return running;
}

void write_plan(const FusionPlan& plan, const std::filesystem::path& path) {
  json doc;
  json order = json::array();
  for (const auto& meta : plan.order) {
    order.push_back(json{{"stream", meta.stream_name},
                         {"validation_accuracy", meta.validation_accuracy}});
  }
  doc["order"] = std::move(order);
  json steps = json::array();
  for (const auto& step : plan.steps) {
    const double total = step.left_weight + step.right_weight;
    steps.push_back(json{{"left", step.left},
                         {"right", step.right},
                         {"left_weight", step.left_weight},
                         {"right_weight", step.right_weight},
                         {"normalized_weights",
                          {step.left_weight / total, step.right_weight / total}},
                         {"result", step.result}});
  }
  doc["steps"] = std::move(steps);

  std::ofstream out(path);
  if (!out) raise(ErrorCode::missing_data, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace streamfuse
