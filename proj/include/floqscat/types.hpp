#pragma once

#include <complex>

#include <Eigen/Dense>

namespace floqscat {

using cplx = std::complex<double>;
using Index = Eigen::Index;

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr cplx kI{0.0, 1.0};

}  // namespace floqscat
