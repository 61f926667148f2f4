// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file fermi.hpp
 *  \brief Fermi-Dirac occupation, its derivatives and divided differences.
 */

#pragma once

#include "debye/common.hpp"

#include <initializer_list>
#include <span>

namespace debye {

/// Temperature T > 0 (k_B = 1) and chemical potential mu. With zero_temperature
/// the occupation is the step function chi(lambda < 0).
struct OccupationModel
{
    double T{0.025};
    double mu{0};
    bool zero_temperature{false};

    double beta() const
    {
        return 1 / T;
    }
    /// Same model with the step-function occupation.
    OccupationModel at_zero_temperature() const
    {
        OccupationModel o = *this;
        o.zero_temperature = true;
        return o;
    }
};

/// Largest derivative order supported by fermi_dirac.
constexpr int max_fermi_order = 10;

/// f_T^{(order)}(lambda), f_T(lambda) = 1 / (e^{lambda/T} + 1). Overflow safe for any finite lambda.
double fermi_dirac(double lambda, const OccupationModel& occ, int order = 0);
/// Complex argument, order 0 only.
cplx fermi_dirac(cplx z, double T);

/// Coalescence threshold below which divided differences use a Taylor expansion.
inline double coalescence_tol(const OccupationModel& occ)
{
    return 1e-6 * std::max(occ.T, 1.0);
}

/// Divided difference f[x_0, ..., x_n] of f_T(. - mu), 1 <= n <= 6; symmetric in its arguments.
double divided_difference(const OccupationModel& occ, std::span<const double> nodes);
inline double divided_difference(const OccupationModel& occ, std::initializer_list<double> nodes)
{
    return divided_difference(occ, std::span<const double>(nodes.begin(), nodes.size()));
}

} // namespace debye
