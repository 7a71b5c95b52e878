#pragma once

#include <Eigen/Dense>
#include <complex>

namespace lisce {

template <typename T>
using CxMat = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using CxVec = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, 1>;
template <typename T>
using ReMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using ReVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using cxmat = CxMat<double>;
using cxvec = CxVec<double>;
using remat = ReMat<double>;
using revec = ReVec<double>;
using cxd = std::complex<double>;

inline constexpr const char* kVersion = "1.0.0";

}  // namespace lisce
