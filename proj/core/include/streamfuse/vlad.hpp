#pragma once

#include <Eigen/Core>

#include "streamfuse/kmeans.hpp"

namespace streamfuse {

// Elementwise signed square root: sign(v_i) * sqrt(|v_i|).
Eigen::VectorXd power_normalize(const Eigen::VectorXd& v);

// L2-normalize each block of `block_len` entries independently; zero
// blocks stay zero.
void intra_normalize_inplace(Eigen::VectorXd& v, Eigen::Index block_len);

// Residual accumulation only: each descriptor adds (x - c_j) into the block
// of each of its k nearest centers (Euclidean, ties to the lowest index).
// Output length is num_centers * dim.
Eigen::VectorXd vlad_k_accumulate(const Eigen::MatrixXd& descriptors,
                                  const Codebook& codebook, int k);

// Full VLAD-k: accumulate residuals, power-normalize the whole vector,
// then intra-normalize per center block.
Eigen::VectorXd vlad_k_encode(const Eigen::MatrixXd& descriptors,
                              const Codebook& codebook, int k);

}  // namespace streamfuse
