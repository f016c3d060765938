#pragma once

#include <complex>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>

namespace finslerlab {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

/// Real-valued function of a complex vector (a fiber norm, a weight, a potential).
using ComplexScalarFn = std::function<double(const CVec&)>;
/// Real-valued function of a real vector.
using RealScalarFn = std::function<double(const RVec&)>;

/// Splits u = x + iy into the real layout [x_1..x_m, y_1..y_m].
RVec to_real(const CVec& u);
/// Inverse of to_real.
CVec to_complex(const RVec& x);

}  // namespace finslerlab
