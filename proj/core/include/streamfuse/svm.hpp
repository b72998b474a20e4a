#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "streamfuse/types.hpp"

namespace streamfuse {

struct SvmConfig {
  double C = 1.0;            // hinge weight; per-stream per the recipes
  double tolerance = 1e-3;   // on the epoch's max projected dual gradient
  int max_epochs = 1000;
  std::uint64_t seed = 0;    // coordinate permutation
  bool fit_bias = true;      // augment features with a constant 1
};

// One-vs-rest linear classifier. Row c holds class c's weight vector with
// the bias as the last coordinate.
struct SvmModel {
  std::vector<std::string> class_names;
  Eigen::MatrixXd weights;              // K x (d+1)
  Eigen::VectorXd training_objective;   // final primal objective per class

  Eigen::Index num_classes() const { return weights.rows(); }
  Eigen::Index feature_dim() const { return weights.cols() - 1; }
};

// Per-epoch solver diagnostics for one binary subproblem.
struct SvmClassTrace {
  std::vector<double> dual_objective;            // maximization form
  std::vector<double> max_projected_gradient;
  int epochs = 0;
};

// Trains per class c the L2-regularized squared-hinge problem
//   min_w 1/2 ||w||^2 + C sum_i max(0, 1 - y_i w.x_i)^2
// by coordinate descent on its dual (alpha_i >= 0, diagonal shift 1/(2C)),
// visiting coordinates in a fresh random permutation each epoch.
SvmModel svm_train(const Eigen::MatrixXf& features,
                   const std::vector<std::int32_t>& labels,
                   const std::vector<std::string>& class_names,
                   const SvmConfig& config,
                   std::vector<SvmClassTrace>* traces = nullptr);

// Raw margins w_c . (x, 1), one column per class.
Eigen::MatrixXd svm_margins(const SvmModel& model, const Eigen::MatrixXf& features);
ScoreMatrix svm_predict(const SvmModel& model, const FeatureSet& features);

// Per-video softmax (max-shifted); rows land on the probability simplex and
// the per-row argmax is unchanged.
ScoreMatrix normalize_scores(const ScoreMatrix& scores);

// Primal objective of one binary subproblem; shared by tests and traces.
double svm_primal_objective(const Eigen::MatrixXd& augmented,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                            double C);

void save_svm(const SvmModel& model, const std::filesystem::path& json_path);
SvmModel load_svm(const std::filesystem::path& json_path);

}  // namespace streamfuse
