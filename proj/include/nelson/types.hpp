#pragma once

#include <complex>
#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace nelson {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Mat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<cplx>;

inline constexpr double pi = 3.14159265358979323846;

}  // namespace nelson
