// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file bands.hpp
 *  \brief Fiber Hamiltonians h_k = |-i grad + k|^2 - phi, band structures,
 *  densities and spectral gaps.
 */

#pragma once

#include "debye/fermi.hpp"
#include "debye/field.hpp"

#include <limits>

namespace debye {

/// Uniform grid of k-points in fractional coordinates j_i / n_i, j_i centered, k = 0 included.
struct KGrid
{
    Index3 n{1, 1, 1};
    std::vector<Index3> labels;
    std::vector<VecR> kfrac;
    std::vector<VecR> kcart;

    KGrid() = default;
    KGrid(const Lattice& lat, const Index3& n_);
    int size() const
    {
        return static_cast<int>(kfrac.size());
    }
    /// Position of k = 0.
    int gamma_index() const;
};

/// Dense fiber matrix <G|h_k|G'> = |G+k|^2 delta - phi(G - G').
struct FiberHamiltonian
{
    VecR k;
    MatC H;
};

/// Fiber matrix at Cartesian k. With reduce, k outside the Brillouin cell is folded back (with a warning).
FiberHamiltonian assemble_fiber(const PlaneWaveBasis& basis, const PeriodicField& phi, const VecR& k,
                                bool reduce = true);

/// Eigenpairs of one fiber, eigenvalues ascending.
struct FiberEigen
{
    VecR k;
    VecR eval;
    MatC evec; ///< columns orthonormal, rows indexed by the basis G-set
};

/// Dense Hermitian eigensolve (LAPACK zheevd).
FiberEigen diagonalize_fiber(const FiberHamiltonian& h);
/// Eigenpairs of a Hermitian matrix; only the lower triangle is read.
void hermitian_eigensolve(const MatC& a, VecR& eval, MatC& evec);

struct BandStructure
{
    KGrid kgrid;
    std::vector<FiberEigen> fibers;

    double min_eigenvalue() const;
    double max_eigenvalue() const;
};

/// With refine_below finite, eigenpairs below it get one step of mixed-precision refinement.
BandStructure compute_bands(const PlaneWaveBasis& basis, const PeriodicField& phi, const KGrid& kgrid,
                            double refine_below = -std::numeric_limits<double>::infinity());

/// One correction step for the eigenpairs with eval < below: residuals (H - e) v in extended
/// precision, expanded in the remaining eigenvectors. Pairs closer than `cluster` are not mixed.
void refine_eigenpairs(const MatC& H, FiberEigen& e, double below, double cluster = 1e-9);

/// Charge per cell split into an integer count of states below mu and a small thermal part,
/// so differences near an insulating state keep full relative precision.
struct ChargeCount
{
    double below{0}; ///< k-average of the number of eigenvalues < mu
    double thermal{0}; ///< k-average of sum_above f - sum_below (1 - f)
    double total() const
    {
        return below + thermal;
    }
};

ChargeCount charge_count(const BandStructure& bands, const OccupationModel& occ);

struct DensityResult
{
    PeriodicField rho;
    double charge{0};
    ChargeCount count;
    double tail_weight{0};
    bool cutoff_too_low{false};
};

/// rho(x) = k-average of sum_n f_T(eps_nk - mu) |u_nk(x)|^2 on the basis FFT grid.
DensityResult density_from_bands(const PlaneWaveBasis& basis, const BandStructure& bands, const OccupationModel& occ);
/// Bands plus density for a potential.
DensityResult density_from_potential(const PlaneWaveBasis& basis, const PeriodicField& phi,
                                     const OccupationModel& occ, const KGrid& kgrid, BandStructure* bands = nullptr);

/// Distances from mu to the spectrum.
struct GapReport
{
    double eta{0};          ///< min over all (n, k)
    double eta0{0};         ///< min over the k = 0 fiber
    double edge_below{0};   ///< highest eigenvalue below mu (-inf if none)
    double edge_above{0};   ///< lowest eigenvalue above mu
    int bands_below{0};     ///< number of bands entirely below mu
    bool in_gap{false};     ///< mu strictly between two bands on the sampled grid
};

GapReport spectral_gap(const BandStructure& bands, double mu);

/// Midpoint of the gap above the lowest `gap_index` bands.
double gap_center(const BandStructure& bands, int gap_index);

} // namespace debye
