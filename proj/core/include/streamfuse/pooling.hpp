#pragma once

#include <Eigen/Core>

namespace streamfuse {

// Arithmetic mean per column; errors on an empty matrix.
Eigen::VectorXd mean_pool(const Eigen::MatrixXd& rows);

// v / sum(|v_i|); errors on the zero vector.
Eigen::VectorXd l1_normalize(const Eigen::VectorXd& v);

}  // namespace streamfuse
