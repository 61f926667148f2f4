// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file scf.hpp
 *  \brief Periodic self-consistent field -Laplace(phi) = kappa - den f_T(h^phi - mu),
 *  chemical potential from charge neutrality, and designer dielectrics.
 */

#pragma once

#include "debye/bands.hpp"

#include <limits>

namespace debye {

enum class MuMode
{
    fixed_mu,
    fixed_charge
};

struct SCFConfig
{
    double mixing{0.5};
    int anderson_depth{6};
    double tol_residual{1e-10}; ///< on the charge mismatch ||kappa - rho + Laplace(phi)||_{L2}
    int max_iter{200};
    MuMode mu_mode{MuMode::fixed_charge};
    double mu{0};                                                      ///< fixed_mu only
    double target_charge{std::numeric_limits<double>::quiet_NaN()};   ///< NaN: int kappa

    void validate() const;
};

/// Converged periodic state and its spectral data.
struct CrystalState
{
    PlaneWaveBasis basis;
    KGrid kgrid;
    OccupationModel occ; ///< occ.mu is mu_per
    PeriodicField kappa, rho, phi;
    BandStructure bands;
    GapReport gap;
    std::vector<double> residual_history;
    std::vector<double> charge_defects; ///< |int rho - int kappa| per iterate
    int iterations{0};
    bool converged{false};
    bool dielectric{false};

    /// ||Laplace(phi) + kappa - rho||_{L2}.
    double poisson_residual() const;
    /// ||phi||_{H2} + |mu|.
    double lambda_value() const;
};

/// Bisection for the chemical potential with fixed bands; |charge - target| < 1e-12 target.
double solve_chemical_potential(const BandStructure& bands, double T, double target_charge);
/// Convenience form: bands from phi on the k-grid.
double solve_chemical_potential(const PlaneWaveBasis& basis, const PeriodicField& phi, double T,
                                double target_charge, const KGrid& kgrid);

/// Fixed point of phi -> (-Laplace)^{-1}(kappa - rho(phi, mu)) with Anderson mixing on phi.
CrystalState scf_solve(const PlaneWaveBasis& basis, const PeriodicField& kappa, const SCFConfig& cfg, double T,
                       const KGrid& kgrid, const PeriodicField* phi0 = nullptr);

/// rho = den f_T(h_per - mu), kappa = -Laplace(phi) + rho. Requires mu inside a gap.
CrystalState construct_dielectric_kappa(const PlaneWaveBasis& basis, const PeriodicField& phi,
                                        const OccupationModel& occ, const KGrid& kgrid);

struct DielectricityReport
{
    double eta{0}, eta0{0};
    bool mu_in_gap{false};
    double lambda_value{0};
    double lambda_bound{0};
    bool lambda_ok{false};
    double c_T{0}; ///< T^{-1} e^{-eta0 / T}
};

DielectricityReport verify_dielectricity(const CrystalState& state, double lambda_bound);

} // namespace debye
