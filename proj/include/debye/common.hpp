// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file common.hpp
 *  \brief Scalar and matrix aliases shared by all modules.
 */

#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace debye {

using cplx = std::complex<double>;
using VecR = Eigen::VectorXd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using MatC = Eigen::MatrixXcd;

/// Integer index triple; unused trailing axes are zero.
using Index3 = std::array<int, 3>;

constexpr double pi = 3.14159265358979323846;

} // namespace debye
