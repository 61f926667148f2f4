// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file fft.hpp
 *  \brief FFTW wrappers with the cell-average normalization.
 *
 *  Grid values are f(x_j) = sum_G c(G) e^{i G.x_j}; coefficients are
 *  c(G) = (1/n) sum_j f(x_j) e^{-i G.x_j}. Parseval: mean_j |f(x_j)|^2 = sum_G |c(G)|^2.
 */

#pragma once

#include "debye/common.hpp"

namespace debye {

/// Coefficients (FFT order) to grid values.
void fft_to_grid(const Index3& n, const cplx* coeffs, cplx* values);
/// Grid values to coefficients (FFT order), including the 1/n factor.
void fft_to_coeffs(const Index3& n, const cplx* values, cplx* coeffs);

/// Number of grid points.
inline size_t grid_size(const Index3& n)
{
    return static_cast<size_t>(n[0]) * n[1] * n[2];
}

/// Linear FFT-order position of a frequency triple, -1 if it does not fit.
inline long fft_slot(const Index3& n, const Index3& m)
{
    long s = 0;
    for (int i = 0; i < 3; i++) {
        int half = n[i] / 2;
        if (m[i] > half || m[i] < half - n[i] + 1) {
            return -1;
        }
        int j = m[i] < 0 ? m[i] + n[i] : m[i];
        s = s * n[i] + j;
    }
    return s;
}

/// Frequency triple of a linear FFT-order position.
inline Index3 fft_freq(const Index3& n, size_t slot)
{
    Index3 m{0, 0, 0};
    for (int i = 2; i >= 0; i--) {
        int j = static_cast<int>(slot % n[i]);
        slot /= n[i];
        m[i] = j > n[i] / 2 ? j - n[i] : j;
    }
    return m;
}

} // namespace debye
