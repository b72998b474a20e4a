#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace streamfuse {

struct Codebook {
  Eigen::MatrixXd centers;  // num_centers x dim

  Eigen::Index num_centers() const { return centers.rows(); }
  Eigen::Index dim() const { return centers.cols(); }
};

struct KmeansResult {
  Codebook codebook;
  std::vector<double> inertia;  // per iteration, non-increasing
  int iterations = 0;
};

// Lloyd's iterations from a seeded k-means++ initialization. Stops when the
// largest center movement drops below `tol` or after `max_iterations`.
// Nearest-center ties always go to the lowest center index.
KmeansResult kmeans_fit(const Eigen::MatrixXd& data, Eigen::Index num_centers,
                        std::uint64_t seed, int max_iterations = 100,
                        double tol = 1e-6);

// Index of the nearest center (ties to the lowest index).
Eigen::Index nearest_center(const Codebook& codebook,
                            const Eigen::RowVectorXd& point);

void save_codebook(const Codebook& codebook,
                   const std::filesystem::path& json_path);
Codebook load_codebook(const std::filesystem::path& json_path);

}  // namespace streamfuse
