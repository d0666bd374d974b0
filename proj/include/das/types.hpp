#pragma once

#include <Eigen/Core>

namespace das {

// Row-major layout throughout: rows are samples, columns are features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

}  // namespace das
