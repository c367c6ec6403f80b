#pragma once

#include <complex>

#include <Eigen/Dense>

namespace activeid {

using Matrix   = Eigen::MatrixXd;
using Vector   = Eigen::VectorXd;
using CMatrix  = Eigen::MatrixXcd;
using CVector  = Eigen::VectorXcd;
using Complex  = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace activeid
