#include "streamfuse/vlad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "streamfuse/errors.hpp"

namespace streamfuse {

Eigen::VectorXd power_normalize(const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out(i) = std::copysign(std::sqrt(std::abs(v(i))), v(i));
  }
  return out;
}

void intra_normalize_inplace(Eigen::VectorXd& v, Eigen::Index block_len) {
  if (block_len < 1 || v.size() % block_len != 0) {
    raise(ErrorCode::dim_mismatch, "intra_normalize block length does not divide");
  }
  for (Eigen::Index start = 0; start < v.size(); start += block_len) {
    auto block = v.segment(start, block_len);
    const double norm = block.norm();
    if (norm > 0.0) block /= norm;
  }
}

Eigen::VectorXd vlad_k_accumulate(const Eigen::MatrixXd& descriptors,
                                  const Codebook& codebook, int k) {
  const Eigen::Index num_centers = codebook.num_centers();
  const Eigen::Index dim = codebook.dim();
  if (descriptors.rows() < 1) {
    raise(ErrorCode::degenerate_data, "vlad over zero descriptors");
  }
  if (descriptors.cols() != dim) {
    raise(ErrorCode::dim_mismatch,
          "descriptor dim " + std::to_string(descriptors.cols()) +
              " vs codebook dim " + std::to_string(dim));
  }
  if (k < 1 || k > num_centers) {
    raise(ErrorCode::dim_mismatch, "vlad k " + std::to_string(k) +
                                       " not in [1, " +
                                       std::to_string(num_centers) + "]");
  }

  Eigen::VectorXd encoded = Eigen::VectorXd::Zero(num_centers * dim);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(num_centers));
  Eigen::VectorXd dist(num_centers);

  for (Eigen::Index i = 0; i < descriptors.rows(); ++i) {
    for (Eigen::Index c = 0; c < num_centers; ++c) {
      dist(c) = (descriptors.row(i) - codebook.centers.row(c)).squaredNorm();
    }
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&dist](Eigen::Index a, Eigen::Index b) {
                        if (dist(a) != dist(b)) return dist(a) < dist(b);
                        return a < b;
                      });
    for (int j = 0; j < k; ++j) {
      const Eigen::Index c = order[static_cast<std::size_t>(j)];
      encoded.segment(c * dim, dim) +=
          (descriptors.row(i) - codebook.centers.row(c)).transpose();
    }
  }
  return encoded;
}

Eigen::VectorXd vlad_k_encode(const Eigen::MatrixXd& descriptors,
                              const Codebook& codebook, int k) {
  Eigen::VectorXd encoded = vlad_k_accumulate(descriptors, codebook, k);
  encoded = power_normalize(encoded);
  intra_normalize_inplace(encoded, codebook.dim());
  return encoded;
}

}  // namespace streamfuse
