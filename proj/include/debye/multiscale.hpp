// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file multiscale.hpp
 *  \brief Deformed crystals kappa_delta = kappa_per + delta^p kappa'(delta y) on an N-fold supercell,
 *  the nonlinear micro solve for psi_micro = phi_delta - phi_per, and its decomposition
 *  phi_delta = phi_per + delta psi(delta y) + phi_rem(delta y).
 */

#pragma once

#include "debye/macro.hpp"
#include "debye/response.hpp"
#include "debye/scf.hpp"

#include <Eigen/Cholesky>

#include <memory>

namespace debye {

/// Supercell discretization of a base crystal: plane waves of the same cutoff on N x L and the
/// supercell k-grid Nk / N, so the unperturbed supercell state reproduces the base crystal.
class MicroProblem
{
  public:
    MicroProblem(const CrystalState& base, int N);

    const CrystalState& base() const
    {
        return base_;
    }
    int N() const
    {
        return N_;
    }
    double delta() const
    {
        return 1.0 / N_;
    }
    const Lattice& lattice() const
    {
        return basis_.lattice;
    }
    const PlaneWaveBasis& basis() const
    {
        return basis_;
    }
    const KGrid& kgrid() const
    {
        return kgrid_;
    }
    const Index3& grid() const
    {
        return basis_.fft_grid;
    }
    Index3 factors() const;

    /// Zero field on the supercell grid.
    PeriodicField zero() const;
    /// Micro-periodic field repeated over the supercell.
    PeriodicField tile(const PeriodicField& micro_field) const;
    const PeriodicField& phi_per() const
    {
        return phi_per_;
    }
    const PeriodicField& rho_per() const
    {
        return rho_per_;
    }

    /// Supercell bands of phi; occupied and thermally relevant levels are refined.
    BandStructure bands(const PeriodicField& phi) const;
    /// rho(phi_per + psi) - rho_per; the mean is taken from the charge counts.
    PeriodicField density_change(const PeriodicField& psi, BandStructure* out_bands = nullptr) const;
    /// -Laplace(psi) + rho(phi_per + psi) - rho_per - kappa'_delta.
    PeriodicField residual(const PeriodicField& psi, const PeriodicField& kappa_prime_delta) const;

    /// M psi, fiber by fiber with M_k of the base crystal, k = j / N.
    PeriodicField apply_M(const PeriodicField& v) const;
    /// (-Laplace + M) v.
    PeriodicField apply_jacobian(const PeriodicField& v) const;
    /// (-Laplace + M)^{-1} r, with the G = 0 entry of the k = 0 fiber through its Schur complement b(0).
    PeriodicField solve_jacobian(const PeriodicField& r) const;
    /// Same on the complement of the constant mode (its component of r and of the result is zero).
    PeriodicField solve_jacobian_nonconstant(const PeriodicField& r) const;

    /// N(psi) = rho(phi_per + psi) - rho_per - M psi.
    PeriodicField nonlinearity(const PeriodicField& psi) const;

    /// Constant c with charge(phi_per + psi + c) - charge_per = target, from the eigenvalues of
    /// phi_per + psi (adding c lowers every level by c).
    double constant_shift(const BandStructure& bands, double target) const;
    /// Density change for bands of phi_per + psi shifted by the constant c.
    PeriodicField density_change(const BandStructure& bands, double c) const;

  private:
    struct Fiber
    {
        Index3 label;
        VecR k;
        MatC K;                    ///< |k+G|^2 + M_k on the density sphere
        Eigen::LLT<MatC> full;     ///< k != 0
        Eigen::LLT<MatC> rest;     ///< block without G = 0
        VecC col0;                 ///< K_{r0}
        double schur{0};           ///< b(k)
        std::vector<long> slots;   ///< supercell grid slot of each density index (-1 off grid)
    };

    void build_fibers() const;
    VecC gather_fiber(const PeriodicField& f, const Fiber& fb) const;
    void scatter_fiber(PeriodicField& f, const Fiber& fb, const VecC& x) const;

    CrystalState base_;
    int N_{1};
    PlaneWaveBasis basis_;
    KGrid kgrid_;
    PeriodicField phi_per_, rho_per_;
    ChargeCount count_per_;
    mutable std::vector<Fiber> fibers_;
    mutable bool fibers_built_{false};
};

/// kappa_delta on an N-supercell. The macro box is the micro cell itself (x = delta y), so a macro
/// Miller index n is the supercell Miller index n.
struct DeformedCrystal
{
    std::shared_ptr<const MicroProblem> micro;
    double delta{1};
    double exponent{3};             ///< p in delta^p kappa'(delta y)
    std::vector<GaussianBump> bumps; ///< kappa' in macro units
    PeriodicField kappa_prime;       ///< on the macro box, supercell grid
    PeriodicField kappa_prime_delta; ///< delta^p kappa'(delta y) on the supercell
    PeriodicField kappa_delta;       ///< kappa_per tiled + kappa_prime_delta

    /// int_supercell (kappa_delta - kappa_per) = delta^{p-d} int kappa'.
    double added_charge() const;
    double expected_added_charge() const;
};

/// Refuses bumps whose periodic images overlap above 1e-8 or that the supercell grid cannot resolve.
DeformedCrystal build_deformed_kappa(const CrystalState& base, int N, const std::vector<GaussianBump>& bumps,
                                     double exponent = 3);

struct NewtonOptions
{
    int max_iter{40};
    double tol{1e-10};        ///< on ||R||_{H^-1} / ||kappa'_delta||_{H^-1}
    bool relinearize{false};  ///< dense supercell Jacobian at every iterate instead of the frozen fibers
    double min_step{1.0 / 64};
};

struct MicroSolution
{
    PeriodicField psi;       ///< psi_micro on the supercell
    PeriodicField phi_delta; ///< phi_per + psi_micro
    std::vector<double> residuals;    ///< ||R||_{H^-1} / ||kappa'_delta||_{H^-1} per iterate
    std::vector<double> residuals_l2; ///< same in L2
    std::vector<double> steps;     ///< accepted step lengths
    double mean_shift{0};          ///< constant mode of psi_micro fixed by charge balance
    double charge_defect{0};       ///< |int (rho_delta - rho_per) - int kappa'_delta|
    int iterations{0};
    bool converged{false};
};

/// Chord Newton for -Laplace psi = kappa'_delta - (rho(phi_per + psi) - rho_per) at mu = mu_per.
/// The constant mode, whose Jacobian entry is the exponentially small b(0), is fixed exactly by
/// charge balance from the current eigenvalues. Divergence raises RegimeViolation.
MicroSolution micro_solve_perturbation(const DeformedCrystal& deformed, const NewtonOptions& opt = {});

/// N(psi) = F(phi_per + psi) - F(phi_per) - M psi on the supercell of psi.
SupercellField nonlinearity_N(const CrystalState& base, const SupercellField& psi);

struct MultiscaleReport
{
    int N{1};
    double delta{1};
    double exponent{3};
    double nu{0};
    MatR eps;
    PeriodicField psi;     ///< macro solution of (nu - div eps grad) psi = kappa'
    PeriodicField phi_delta;
    PeriodicField phi_rem; ///< macro variable
    double rem_l2{0}, rem_h1{0}, rem_delta_norm{0};
    double lead_l2{0}, lead_h1{0};   ///< delta^{p-2} psi
    double zeta{0};                  ///< delta m^{-1/2}
    double a{0}, r{0};               ///< P_r cut, a = delta r
    double low_share{0}, high_share{0}; ///< shares of ||phi_rem||_delta^2 in ran P_r and ran Pbar_r
    double decomposition_defect{0};  ///< max |phi_delta - phi_per - delta psi - phi_rem| on the grid
    double phi_only_residual{0};     ///< ||-Laplace phi_delta + rho(phi_delta) - kappa_delta||
    double nonlinearity_l2{0};       ///< ||N(psi_micro)||
    double mean_shift{0};
    std::vector<double> newton_residuals;
    int newton_iterations{0};
};

MultiscaleReport expansion_decompose(const DeformedCrystal& deformed, const MicroSolution& sol,
                                     const HomogenizedCoefficients& coeffs, double a = 0.25);

/// Slope of log y against log x by least squares.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace debye
