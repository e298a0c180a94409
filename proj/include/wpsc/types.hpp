#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace wpsc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

}  // namespace wpsc
