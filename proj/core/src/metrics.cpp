#include "streamfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "streamfuse/errors.hpp"

namespace streamfuse {

using nlohmann::json;

double top_k_accuracy(const Eigen::MatrixXd& scores,
                      const std::vector<std::int32_t>& labels, int k) {
  const Eigen::Index n = scores.rows();
  const Eigen::Index num_classes = scores.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    raise(ErrorCode::alignment_mismatch, "labels do not match score rows");
  }
  if (k < 1 || k > num_classes) {
    raise(ErrorCode::usage, "top-k k must be in [1, K]");
  }
  if (n == 0) {
    raise(ErrorCode::degenerate_data, "top_k_accuracy over zero videos");
  }

  std::int64_t hits = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::int32_t label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= num_classes) {
      raise(ErrorCode::alignment_mismatch,
            "label " + std::to_string(label) + " outside class range");
    }
    const double label_score = scores(i, label);
    // Classes ranked strictly ahead of the label: higher score, or equal
    // score with a lower index.
    Eigen::Index ahead = 0;
    for (Eigen::Index c = 0; c < num_classes; ++c) {
      if (c == label) continue;
      if (scores(i, c) > label_score || (scores(i, c) == label_score && c < label)) {
        ++ahead;
      }
    }
    if (ahead < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double top_k_accuracy(const ScoreMatrix& scores,
                      const std::vector<std::int32_t>& labels, int k) {
  return top_k_accuracy(scores.scores, labels, k);
}

std::pair<double, std::vector<double>> mean_average_precision(
    const Eigen::MatrixXd& scores, const std::vector<std::int32_t>& labels,
    Eigen::Index num_classes) {
  const Eigen::Index n = scores.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    raise(ErrorCode::alignment_mismatch, "labels do not match score rows");
  }
  if (scores.cols() != num_classes) {
    raise(ErrorCode::alignment_mismatch, "score columns do not match class count");
  }

  std::vector<double> per_class(static_cast<std::size_t>(num_classes),
                                std::numeric_limits<double>::quiet_NaN());
  double ap_sum = 0.0;
  Eigen::Index classes_with_positives = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < num_classes; ++c) {
    std::int64_t positives = 0;
    for (const auto label : labels) positives += label == c ? 1 : 0;
    if (positives == 0) continue;

    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&scores, c](Eigen::Index a, Eigen::Index b) {
                       return scores(a, c) > scores(b, c);
                     });

    double ap = 0.0;
    std::int64_t seen = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (labels[static_cast<std::size_t>(order[rank])] == c) {
        ++seen;
        ap += static_cast<double>(seen) / static_cast<double>(rank + 1);
      }
    }
    ap /= static_cast<double>(positives);
    per_class[static_cast<std::size_t>(c)] = ap;
    ap_sum += ap;
    ++classes_with_positives;
  }

  if (classes_with_positives == 0) {
    raise(ErrorCode::degenerate_data, "no class has a positive example");
  }
  return {ap_sum / static_cast<double>(classes_with_positives), per_class};
}

EvalReport evaluate(const ScoreMatrix& scores,
                    const std::vector<std::int32_t>& labels,
                    Eigen::Index num_classes) {
  EvalReport report;
  report.num_videos = scores.scores.rows();
  report.top1 = top_k_accuracy(scores.scores, labels, 1);
  report.top3 = num_classes >= 3 ? top_k_accuracy(scores.scores, labels, 3)
                                 : top_k_accuracy(scores.scores, labels,
                                                  static_cast<int>(num_classes));
  auto [map, per_class] = mean_average_precision(scores.scores, labels, num_classes);
  report.map = map;
  report.per_class_ap = std::move(per_class);
  return report;
}

std::string format_report_table(const std::string& model_name,
                                const EvalReport& report, int extra_k,
                                double extra_k_value) {
  char line[256];
  std::string out;
  std::string header = "Model";
  header.resize(std::max<std::size_t>(model_name.size(), 5) + 2, ' ');
  out += header + "| Top-1    | Top-3    | mAP\n";

  std::string name = model_name;
  name.resize(std::max<std::size_t>(model_name.size(), 5) + 2, ' ');
  std::snprintf(line, sizeof(line), "| %6.2f%%  | %6.2f%%  | %6.2f%%\n",
                100.0 * report.top1, 100.0 * report.top3, 100.0 * report.map);
  out += name + line;
  if (extra_k > 0) {
    std::snprintf(line, sizeof(line), "Top-%d Accuracy: %.2f%%\n", extra_k,
                  100.0 * extra_k_value);
    out += line;
  }
  return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  json doc;
  doc["top1"] = report.top1;
  doc["top3"] = report.top3;
  doc["mAP"] = report.map;
  doc["num_videos"] = report.num_videos;
  json per_class = json::array();
  for (const double ap : report.per_class_ap) {
    if (std::isnan(ap)) per_class.push_back(nullptr);
    else per_class.push_back(ap);
  }
  doc["per_class_ap"] = std::move(per_class);

  std::ofstream out(path);
  if (!out) raise(ErrorCode::missing_data, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace streamfuse
