#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "streamfuse/types.hpp"

namespace streamfuse {

struct EvalReport {
  double top1 = 0.0;
  double top3 = 0.0;
  double map = 0.0;
  std::vector<double> per_class_ap;  // NaN for classes with no positives
  std::int64_t num_videos = 0;
};

// Fraction of rows whose label is among the k best-scoring classes.
// Score ties rank the lower class index first.
double top_k_accuracy(const Eigen::MatrixXd& scores,
                      const std::vector<std::int32_t>& labels, int k);
double top_k_accuracy(const ScoreMatrix& scores,
                      const std::vector<std::int32_t>& labels, int k);

// Non-interpolated AP per class: rank videos by the class's score
// (descending, ties keep input order); AP averages precision at each
// positive's rank. Classes without positives are excluded from the mean.
std::pair<double, std::vector<double>> mean_average_precision(
    const Eigen::MatrixXd& scores, const std::vector<std::int32_t>& labels,
    Eigen::Index num_classes);

EvalReport evaluate(const ScoreMatrix& scores,
                    const std::vector<std::int32_t>& labels,
                    Eigen::Index num_classes);

// Table mirroring the usual challenge layout (Model | Top-1 | Top-3 | mAP),
// percentages at 2 decimals. Extra top-k column when extra_k > 0.
std::string format_report_table(const std::string& model_name,
                                const EvalReport& report, int extra_k = 0,
                                double extra_k_value = 0.0);

void write_report(const EvalReport& report, const std::filesystem::path& path);

}  // namespace streamfuse
