// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file macro.hpp
 *  \brief Homogenized linear Poisson-Boltzmann equation (nu - div eps grad) psi = kappa'
 *  on a periodic macroscopic box, and Debye-screening observables.
 */

#pragma once

#include "debye/field.hpp"

namespace debye {

struct MacroProblem
{
    Lattice box;
    double nu{1};
    MatR eps;             ///< d x d symmetric positive definite
    PeriodicField source; ///< kappa' on the box

    /// Throws ConfigError unless nu > 0, eps symmetric with positive spectrum and the source lives on `box`.
    void validate() const;
};

/// Fourier-diagonal solve psi(xi) = kappa'(xi) / (nu + xi.eps xi).
PeriodicField solve_pb(const MacroProblem& p);

/// ||(nu - div eps grad) psi - kappa'||_{L2} / ||kappa'||_{L2}.
double pb_residual(const MacroProblem& p, const PeriodicField& psi);

/// |<psi, kappa'> - nu ||psi||^2 - <grad psi, eps grad psi>| / |<psi, kappa'>|.
double energy_identity_defect(const MacroProblem& p, const PeriodicField& psi);

/// Normalized Gaussian bump exp(-|x - c|^2 / (2 w^2)) / (2 pi w^2)^{d/2} times `charge`.
struct GaussianBump
{
    VecR center;
    double width{0.05};
    double charge{1};
};

/// Periodized sum of bumps from exact Fourier coefficients; width must resolve on the grid.
PeriodicField gaussian_source(const Lattice& box, const Index3& grid, const std::vector<GaussianBump>& bumps);

/// Longest Debye length over the principal axes, sqrt(lambda_max(eps) / nu).
double max_debye_length(double nu, const MatR& eps);
/// Cubic-ish box with every basis vector `lengths` Debye lengths long.
Lattice auto_box(int d, double nu, const MatR& eps, double lengths = 12);

struct DecayFit
{
    std::vector<VecR> axes;          ///< principal axes of eps
    std::vector<double> rate;        ///< fitted decay rate along each axis
    std::vector<double> expected;    ///< sqrt(nu / lambda_axis)
    std::vector<double> rel_error;
    double box_debye_lengths{0};     ///< shortest box width over the longest Debye length
    bool reliable{false};            ///< box spans at least 10 Debye lengths
};

/// Decay of psi away from `center` along the principal axes of eps. In 1D the three-point
/// identity psi(x - h) + psi(x + h) = 2 cosh(kappa h) psi(x), exact for the periodic Green's
/// function outside the source, is averaged over the far field; for d >= 2 log(r^{(d-1)/2} psi)
/// is regressed on r over [2, 3.5] Debye lengths.
DecayFit debye_observables(const MacroProblem& p, const PeriodicField& psi, const VecR& center);

/// Spectral evaluation of f at Cartesian x.
double evaluate_at(const PeriodicField& f, const VecR& x);

/// Second moments  int (x - c)_i (x - c)_j f / int f over the minimum-image cell around c.
MatR second_moments(const PeriodicField& f, const VecR& center);

} // namespace debye
