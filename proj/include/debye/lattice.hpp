// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file lattice.hpp
 *  \brief Bravais lattices, reciprocal bases and plane-wave G-sets.
 */

#pragma once

#include "debye/common.hpp"

namespace debye {

/// Reciprocal basis 2*pi*B^{-T}; columns of `basis` are the lattice vectors.
MatR reciprocal_lattice(const MatR& basis);

/// Bravais lattice in d = 1, 2 or 3 dimensions.
struct Lattice
{
    int d{1};
    MatR basis;      ///< d x d, columns omega_i
    MatR reciprocal; ///< d x d, columns omega*_j
    double volume{0};

    Lattice() = default;
    explicit Lattice(const MatR& basis_);

    /// Lattice enlarged by n[i] along basis vector i.
    Lattice supercell(const Index3& n) const;
    /// Lattice with every basis vector multiplied by s.
    Lattice scaled(double s) const;

    /// Cartesian wave vector of integer (Miller) indices.
    VecR gvec(const Index3& miller) const;
    /// Cartesian point of fractional reciprocal coordinates.
    VecR kcart(const VecR& frac) const
    {
        return reciprocal * frac;
    }
    /// Fractional reciprocal coordinates of a Cartesian wave vector.
    VecR kfrac(const VecR& cart) const
    {
        return basis.transpose() * cart / (2 * pi);
    }
    /// Shortest reciprocal basis vector length.
    double min_reciprocal_length() const;
};

/// Plane-wave G-set |G|^2 <= 2 E_cut and the matching density sphere |G| <= 2 G_max.
struct PlaneWaveBasis
{
    Lattice lattice;
    double ecut{0};
    std::vector<Index3> miller;      ///< wave-function G-set, G = 0 first
    MatR gcart;                      ///< d x n Cartesian vectors of `miller`
    std::vector<Index3> dens_miller; ///< density sphere, G = 0 first
    MatR dens_gcart;
    Index3 max_index{0, 0, 0};       ///< largest |miller| per axis over the density sphere
    Index3 fft_grid{1, 1, 1};        ///< alias-free grid for density-sphere products

    PlaneWaveBasis() = default;
    PlaneWaveBasis(const Lattice& lat, double ecut_);

    /// Basis on the n-fold supercell holding exactly the micro G-set in every Bloch fiber j / n:
    /// q = n G + j. The density set is all differences of wave-function indices.
    static PlaneWaveBasis tiled(const PlaneWaveBasis& micro, const Index3& n);

    int size() const
    {
        return static_cast<int>(miller.size());
    }
    int dens_size() const
    {
        return static_cast<int>(dens_miller.size());
    }
    /// Position of `m` in the density sphere or -1.
    int dens_index(const Index3& m) const;
    /// Position of `m` in the wave-function set or -1.
    int index(const Index3& m) const;

  private:
    std::vector<int> dens_lookup_;
    std::vector<int> wf_lookup_;
    int lookup_slot(const Index3& m) const;
    void finish();
};

/// Lattice points with |G|^2 <= radius2, sorted by (|G|^2, Miller), G = 0 first.
std::vector<Index3> sphere_points(const Lattice& lat, double radius2);

/// Smallest FFT-friendly size >= n (factors 2, 3, 5, 7).
int good_fft_size(int n);

} // namespace debye
