#pragma once

#include <Eigen/Dense>

namespace specrisk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

using VectorRef = Eigen::Ref<const Vector>;

} // namespace specrisk
