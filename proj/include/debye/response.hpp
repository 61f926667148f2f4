// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file response.hpp
 *  \brief Linear response of the crystal density to the potential and the
 *  homogenized coefficients (m, V, rho', eps, nu) derived from it.
 *
 *  Fibers are averaged over the crystal k-grid p:
 *    M_k[G, G'] = -|Omega|^{-1} avg_p sum_nm f[e_{n,p+k}, e_{m,p}] conj(B_nm(G)) B_nm(G'),
 *    B_nm(G') = <u_{n,p+k}| e^{iG'x} |u_{m,p}>,
 *  in the cell-average coefficient basis of the density sphere. With a k-grid of
 *  the single point p = 0 this is the bare k = 0-fiber formula. Velocities are
 *  v_j = d h_p / d p_j = 2(-i grad + p)_j.
 */

#pragma once

#include "debye/scf.hpp"

namespace debye {

/// Evaluation route for divided-difference weights.
enum class Route
{
    eigen,  ///< closed-form divided differences
    contour ///< Cauchy integrals over the contour of contour.hpp
};

/// M_k on the density sphere (dens_size x dens_size). Refuses gapless crystals.
MatC assemble_M_fiber(const CrystalState& crystal, const VecR& k, Route route = Route::eigen);

/// V(x) = -avg_p sum_n f'(e_np - mu) |u_np(x)|^2 (density route, on the basis FFT grid).
PeriodicField screening_density_V(const CrystalState& crystal);
/// m = -avg_p sum_n f'(e_np - mu).
double screening_mass_m(const CrystalState& crystal);

/// rho'_j(x) = avg_p sum_ab f[e_a, e_a, e_b] (v_j)_ab u_a(x) conj(u_b(x)), j = 1..d.
std::vector<PeriodicField> rho_prime(const CrystalState& crystal, Route route = Route::eigen);

struct EpsilonResult
{
    MatR eps;        ///< 1 + eps' - eps''
    MatR eps_p;      ///< eps'
    MatR eps_pp;     ///< eps''
    double eps1{0};  ///< scalar -|Omega|^{-1} avg_p sum_n f''/2 (reported, not part of eps)
    double kbar_cond{0};
};

/// eps' from third divided differences, eps'' = |Omega|^{-1} Re <rho', Kbar_0^{-1} rho'>.
EpsilonResult epsilon_matrix(const CrystalState& crystal, Route route = Route::eigen);
/// Same with the step occupation chi(-inf, mu).
EpsilonResult epsilon_zero_temperature(const CrystalState& crystal);

/// Kbar_0 = Pbar (-Laplace + M_0) Pbar on the density sphere without G = 0, with its condition number.
MatC kbar0(const CrystalState& crystal, const MatC& M0, double* cond = nullptr);

/// b(k) = 1 / (K_k^{-1})_{00}, the Schur complement of the G = 0 entry of K_k = |k+G|^2 + M_k.
double b_function(const CrystalState& crystal, const VecR& k);
/// b(k) from an already assembled fiber.
double b_from_fiber(const PlaneWaveBasis& basis, const MatC& Mk, const VecR& k);

struct BFit
{
    double b0{0};
    MatR eps_fit;            ///< quadratic coefficient matrix
    double quartic_residual{0}; ///< RMS residual of the quadratic-only fit
    double fit_residual{0};     ///< RMS residual of the full fit
    int max_degree{6};
    std::vector<VecR> k;
    std::vector<double> b;
};

/// Least-squares fit over even monomials up to `max_degree` (4 or 6).
BFit fit_b_expansion(const CrystalState& crystal, const std::vector<VecR>& k_samples, int max_degree = 6);
/// Same fit on precomputed samples.
BFit fit_b_samples(int d, const std::vector<VecR>& k, const std::vector<double>& b, int max_degree = 6);
/// n samples on segments through 0 along each axis (and diagonals for d > 1), |k| <= kmax.
std::vector<VecR> default_k_samples(const Lattice& lat, double kmax, int n);

struct EllEntry
{
    VecR k;
    double ell{0};
};

/// ell(k) = delta^{-2} b(delta k) for |k| <= r; refuses delta r outside the Brillouin cell.
std::vector<EllEntry> feshbach_ell(const CrystalState& crystal, double delta, double r,
                                   const std::vector<VecR>& k_samples);

struct RegimeReport
{
    double nu{0};
    double debye_length{0};
    double c_T{0};
    double zeta{0};  ///< delta m^{-1/2}
    double theta{0}; ///< m^{-8/9} delta
    double alpha{0.1};
    double theta_threshold{0.1};
    bool temperature_ok{false}; ///< c_T <= alpha
    bool theta_ok{false};       ///< theta <= threshold
};

/// Debye parameter nu = delta^{-2} b(0) and the regime diagnostics.
RegimeReport regime_from(const CrystalState& crystal, double delta, double b0, double m, double alpha = 0.1,
                           double theta_threshold = 0.1);
/// Same with b(0) and m computed from the crystal.
RegimeReport nu_and_regime(const CrystalState& crystal, double delta, double alpha = 0.1,
                           double theta_threshold = 0.1);

/// Everything above in one pass.
struct HomogenizedCoefficients
{
    PeriodicField V;
    double m{0};
    std::vector<PeriodicField> rho_prime;
    EpsilonResult epsilon;
    double b0{0};
    double eta0{0};
    double s_beta{0}; ///< beta e^{-eta0 beta}
    double c_T{0};

    double nu(double delta) const
    {
        return b0 / (delta * delta);
    }
    double debye_length(double delta) const;
};

HomogenizedCoefficients homogenized_coefficients(const CrystalState& crystal, Route route = Route::eigen);

} // namespace debye
