#include "streamfuse/pooling.hpp"

#include "streamfuse/errors.hpp"

namespace streamfuse {

Eigen::VectorXd mean_pool(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 1) {
    raise(ErrorCode::degenerate_data, "mean_pool over zero rows");
  }
  return rows.colwise().mean().transpose();
}

Eigen::VectorXd l1_normalize(const Eigen::VectorXd& v) {
  const double sum = v.cwiseAbs().sum();
  if (sum <= 0.0) {
    raise(ErrorCode::degenerate_data, "l1_normalize of the zero vector");
  }
  return v / sum;
}

}  // namespace streamfuse
