// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file fft.cpp
 *  \brief FFTW plan cache and normalized transforms.
 */

#include "debye/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace debye {

namespace {

std::mutex plan_mutex;

// Plans are created once under the lock and only executed afterwards; new-array
// execution of an FFTW_UNALIGNED plan is thread safe.
fftw_plan get_plan(const Index3& n, int sign)
{
    static std::map<std::tuple<int, int, int, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_tuple(n[0], n[1], n[2], sign);
    auto it = cache.find(key);
    if (it != cache.end()) {
        return it->second;
    }
    size_t sz = grid_size(n);
    auto* a = fftw_alloc_complex(sz);
    auto* b = fftw_alloc_complex(sz);
    int dims[3] = {n[0], n[1], n[2]};
    fftw_plan p = fftw_plan_dft(3, dims, a, b, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(a);
    fftw_free(b);
    cache[key] = p;
    return p;
}

} // namespace

namespace {

void run(const Index3& n, int sign, const cplx* in, cplx* out)
{
    fftw_plan p = get_plan(n, sign);
    if (in == out) {
        std::vector<cplx> tmp(in, in + grid_size(n));
        fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(tmp.data()), reinterpret_cast<fftw_complex*>(out));
        return;
    }
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)), reinterpret_cast<fftw_complex*>(out));
}

} // namespace

void fft_to_grid(const Index3& n, const cplx* coeffs, cplx* values)
{
    run(n, FFTW_BACKWARD, coeffs, values);
}

void fft_to_coeffs(const Index3& n, const cplx* values, cplx* coeffs)
{
    run(n, FFTW_FORWARD, values, coeffs);
    double s = 1.0 / static_cast<double>(grid_size(n));
    size_t sz = grid_size(n);
    for (size_t i = 0; i < sz; i++) {
        coeffs[i] *= s;
    }
}

} // namespace debye
