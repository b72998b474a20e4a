#include "streamfuse/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "streamfuse/errors.hpp"
#include "streamfuse/matrix_io.hpp"

namespace streamfuse {

using nlohmann::json;

double svm_primal_objective(const Eigen::MatrixXd& augmented,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                            double C) {
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < augmented.rows(); ++i) {
    const double margin = 1.0 - y(i) * augmented.row(i).dot(w);
    if (margin > 0.0) hinge += margin * margin;
  }
  return 0.5 * w.squaredNorm() + C * hinge;
}

namespace {

// Dual coordinate descent on
//   min_a 1/2 a^T (Q + I/(2C)) a - 1^T a,  a_i >= 0,
// maintaining w = sum_i a_i y_i x_i. liblinear's L2-loss update rule.
Eigen::VectorXd solve_binary(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const SvmConfig& config, std::mt19937_64& rng,
                             SvmClassTrace* trace) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const double diag = 1.0 / (2.0 * config.C);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd q_ii(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    q_ii(i) = x.row(i).squaredNorm() + diag;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double max_pg = 0.0;
    for (const Eigen::Index i : order) {
      const double grad = y(i) * x.row(i).dot(w) - 1.0 + diag * alpha(i);
      const double projected = (alpha(i) == 0.0) ? std::min(grad, 0.0) : grad;
      max_pg = std::max(max_pg, std::abs(projected));
      if (projected == 0.0) continue;
      const double next = std::max(alpha(i) - grad / q_ii(i), 0.0);
      if (next != alpha(i)) {
        w += (next - alpha(i)) * y(i) * x.row(i).transpose();
        alpha(i) = next;
      }
    }
    if (trace) {
      // Maximization form: sum(a) - 1/2 ||w||^2 - sum(a^2)/(4C).
      const double dual = alpha.sum() - 0.5 * w.squaredNorm() -
                          alpha.squaredNorm() * (0.25 / config.C);
      trace->dual_objective.push_back(dual);
      trace->max_projected_gradient.push_back(max_pg);
      trace->epochs = epoch + 1;
    }
    if (max_pg < config.tolerance) break;
  }
  return w;
}

}  // namespace

SvmModel svm_train(const Eigen::MatrixXf& features,
                   const std::vector<std::int32_t>& labels,
                   const std::vector<std::string>& class_names,
                   const SvmConfig& config,
                   std::vector<SvmClassTrace>* traces) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  const auto num_classes = static_cast<Eigen::Index>(class_names.size());

  if (config.C <= 0.0 || config.tolerance <= 0.0) {
    raise(ErrorCode::usage, "svm requires C > 0 and tolerance > 0");
  }
  if (num_classes < 2) {
    raise(ErrorCode::degenerate_data, "one-vs-rest needs at least 2 classes");
  }
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    raise(ErrorCode::alignment_mismatch, "labels do not match feature rows");
  }
  if (!features.allFinite()) {
    raise(ErrorCode::non_finite, "svm_train features contain non-finite values");
  }

  std::vector<std::int64_t> class_counts(static_cast<std::size_t>(num_classes), 0);
  for (const auto label : labels) {
    if (label < 0 || label >= num_classes) {
      raise(ErrorCode::alignment_mismatch,
            "label " + std::to_string(label) + " outside class range");
    }
    ++class_counts[static_cast<std::size_t>(label)];
  }
  std::int64_t present = 0;
  for (const auto count : class_counts) present += count > 0 ? 1 : 0;
  if (present < 2) {
    raise(ErrorCode::degenerate_data,
          "training data covers fewer than 2 classes");
  }

  // Bias by feature augmentation with a constant 1.
  Eigen::MatrixXd x(n, d + 1);
  x.leftCols(d) = features.cast<double>();
  x.col(d) = config.fit_bias ? Eigen::VectorXd::Ones(n) : Eigen::VectorXd::Zero(n);

  SvmModel model;
  model.class_names = class_names;
  model.weights.resize(num_classes, d + 1);
  model.training_objective.resize(num_classes);
  if (traces) traces->assign(static_cast<std::size_t>(num_classes), {});

  Eigen::VectorXd y(n);
  for (Eigen::Index c = 0; c < num_classes; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      y(i) = labels[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
    }
    // Seed per class, so per-class solves are order-independent.
    std::mt19937_64 rng(config.seed + 0x51ed2701u + static_cast<std::uint64_t>(c));
    SvmClassTrace* trace = traces ? &(*traces)[static_cast<std::size_t>(c)] : nullptr;
    const Eigen::VectorXd w = solve_binary(x, y, config, rng, trace);
    model.weights.row(c) = w.transpose();
    model.training_objective(c) = svm_primal_objective(x, y, w, config.C);
  }
  return model;
}

Eigen::MatrixXd svm_margins(const SvmModel& model, const Eigen::MatrixXf& features) {
  if (features.cols() != model.feature_dim()) {
    raise(ErrorCode::dim_mismatch,
          "feature dim " + std::to_string(features.cols()) + " vs model dim " +
              std::to_string(model.feature_dim()));
  }
  Eigen::MatrixXd x(features.rows(), features.cols() + 1);
  x.leftCols(features.cols()) = features.cast<double>();
  x.col(features.cols()) = Eigen::VectorXd::Ones(features.rows());
  return x * model.weights.transpose();
}

ScoreMatrix svm_predict(const SvmModel& model, const FeatureSet& features) {
  if (features.unit_kind != UnitKind::video) {
    raise(ErrorCode::dim_mismatch, "svm_predict expects video-level features");
  }
  ScoreMatrix out;
  out.scores = svm_margins(model, features.data);
  out.video_ids.reserve(features.video_index.size());
  for (const auto& block : features.video_index) {
    if (block.count != 1) {
      raise(ErrorCode::dim_mismatch,
            "video '" + block.video_id + "' has more than one feature row");
    }
    out.video_ids.push_back(block.video_id);
  }
  out.normalized = false;
  return out;
}

ScoreMatrix normalize_scores(const ScoreMatrix& scores) {
  ScoreMatrix out = scores;
  for (Eigen::Index r = 0; r < out.scores.rows(); ++r) {
    const double shift = out.scores.row(r).maxCoeff();
    out.scores.row(r) = (out.scores.row(r).array() - shift).exp();
    out.scores.row(r) /= out.scores.row(r).sum();
  }
  out.normalized = true;
  return out;
}

void save_svm(const SvmModel& model, const std::filesystem::path& json_path) {
  const auto stem = json_path.parent_path() / json_path.stem();
  const auto weights_path = std::filesystem::path(stem.string() + ".weights.fmat");
  write_fmat(weights_path, model.weights.cast<float>(), UnitKind::video);

  json doc;
  doc["type"] = "linear_svm";
  doc["classes"] = model.class_names;
  doc["feature_dim"] = model.feature_dim();
  doc["weights_file"] = weights_path.filename().string();
  doc["checksum"] = file_checksum(weights_path);
  std::vector<double> objective(model.training_objective.data(),
                                model.training_objective.data() +
                                    model.training_objective.size());
  doc["training_objective"] = objective;

  std::ofstream out(json_path);
  if (!out) raise(ErrorCode::missing_data, "cannot write " + json_path.string());
  out << doc.dump(2) << '\n';
}

SvmModel load_svm(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) raise(ErrorCode::missing_data, "cannot open " + json_path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, json_path.string() + ": " + e.what());
  }
  if (doc.value("type", "") != "linear_svm") {
    raise(ErrorCode::bad_format, json_path.string() + ": not an svm descriptor");
  }
  const auto weights_path =
      json_path.parent_path() / doc.at("weights_file").get<std::string>();
  if (file_checksum(weights_path) != doc.at("checksum").get<std::string>()) {
    raise(ErrorCode::checksum_mismatch,
          json_path.string() + ": weights block checksum mismatch");
  }

  SvmModel model;
  model.class_names = doc.at("classes").get<std::vector<std::string>>();
  model.weights = read_fmat(weights_path).cast<double>();
  const auto objective = doc.at("training_objective").get<std::vector<double>>();
  model.training_objective = Eigen::Map<const Eigen::VectorXd>(
      objective.data(), static_cast<Eigen::Index>(objective.size()));
  if (model.weights.rows() != static_cast<Eigen::Index>(model.class_names.size())) {
    raise(ErrorCode::bad_format,
          json_path.string() + ": weight rows do not match classes");
  }
  return model;
}

}  // namespace streamfuse
