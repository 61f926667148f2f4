// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file contour.hpp
 *  \brief Cauchy-integral evaluation of (2 pi i)^{-1} oint f_T(z - mu) g(z) dz.
 *
 *  The polygon runs counterclockwise around the real spectrum: horizontal arms at
 *  height +-h (h = eta) from the right cutoff R to mu +- eta, a notch dipping to
 *  +-eps_c = +-min(pi T / 2, eta / 2) at Re z = mu (below the first Matsubara pole),
 *  and a vertical closing edge at Re z = eps_min - 5. The arms are cut where
 *  |f_T(z - mu)| < 1e-16. Each edge uses a tanh-sinh rule; the step halves
 *  until successive estimates agree to `tol`.
 */

#pragma once

#include "debye/fermi.hpp"

#include <functional>

namespace debye {

struct ContourSpec
{
    double mu{0};
    double T{0.025};
    double eta{1};   ///< distance from mu to the spectrum
    double emin{0};  ///< lowest eigenvalue enclosed
    double tol{1e-10};
    int max_level{9};
};

struct ContourNode
{
    cplx z;
    cplx w; ///< f_T(z - mu) dz / (2 pi i)
};

/// Nodes of the rule at a refinement level (level 0: unit tanh-sinh step).
std::vector<ContourNode> contour_nodes(const ContourSpec& spec, int level);

/// Vector-valued contour integral; `g(z, out)` fills out[0..n).
struct ContourResult
{
    VecC value;
    double error{0};
    int level{0};
    int nodes{0};
};
ContourResult contour_integrate(const ContourSpec& spec, int n, const std::function<void(cplx, cplx*)>& g);

/// Matrix-valued form; spectrum_bounds = (eps_min, eps_max) of the operator inside g.
struct ContourMatrixResult
{
    MatC value;
    double error{0};
};
ContourMatrixResult contour_quadrature(const std::function<MatC(cplx)>& integrand, const OccupationModel& occ,
                                       double emin, double emax, double eta, double tol = 1e-10);

/// Spec for a spectrum at distance eta from mu with lowest eigenvalue emin.
ContourSpec make_contour_spec(const OccupationModel& occ, double emin, double eta, double tol = 1e-10);

} // namespace debye
