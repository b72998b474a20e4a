#pragma once

#include <Eigen/Core>
#include <filesystem>

#include "streamfuse/types.hpp"

namespace streamfuse {

// Centering-only PCA (no whitening). Component rows are orthonormal,
// ordered by decreasing explained variance, with each row's first nonzero
// coordinate made positive so fits are reproducible.
struct PcaModel {
  Eigen::VectorXd mean;               // input_dim
  Eigen::MatrixXd components;         // output_dim x input_dim
  Eigen::VectorXd explained_variance; // output_dim, non-increasing

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index output_dim() const { return components.rows(); }
};

struct PcaOptions {
  // Above this input dim the d x d covariance is never formed; a seeded
  // subspace iteration extracts the top components instead.
  Eigen::Index dense_threshold = 1024;
  int max_iterations = 1000;
  double tolerance = 1e-9;
};

PcaModel pca_fit(const Eigen::MatrixXd& data, Eigen::Index out_dim,
                 const PcaOptions& options = {});
PcaModel pca_fit(const FeatureSet& data, Eigen::Index out_dim,
                 const PcaOptions& options = {});

// Per row: (x - mean) . components^T.
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& data);

// JSON descriptor + .fmat blocks for mean and components.
void save_pca(const PcaModel& model, const std::filesystem::path& json_path);
PcaModel load_pca(const std::filesystem::path& json_path);

}  // namespace streamfuse
