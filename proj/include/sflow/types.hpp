#pragma once

#include <Eigen/Dense>
#include <functional>

namespace sflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Right-hand side of an autonomous or non-autonomous ODE.
using Rhs = std::function<Vec(double, const Vec&)>;

}  // namespace sflow
