#pragma once

#include <Eigen/Core>

namespace geodemo {

/// Row-major so that each district's feature vector is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace geodemo
