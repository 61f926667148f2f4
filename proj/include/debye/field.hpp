// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file field.hpp
 *  \brief Periodic and supercell fields, Bloch decomposition, momentum
 *  projection, micro/macro rescaling and the periodic Poisson solve.
 *
 *  Coefficients are cell averages c(G) = |Omega|^{-1} int_Omega e^{-iG.x} f(x) dx,
 *  stored in FFT order on the field grid.
 */

#pragma once

#include "debye/fft.hpp"
#include "debye/lattice.hpp"

#include <string>

namespace debye {

/// Periodic function on a lattice cell.
struct PeriodicField
{
    Lattice lattice;
    Index3 grid{1, 1, 1};
    VecC coeffs; ///< FFT order, size grid_size(grid)
    bool real{true};

    PeriodicField() = default;
    PeriodicField(const Lattice& lat, const Index3& g, bool is_real = true);

    static PeriodicField from_values(const Lattice& lat, const Index3& g, const VecC& values, bool is_real = true);
    static PeriodicField from_real_values(const Lattice& lat, const Index3& g, const VecR& values);

    size_t size() const
    {
        return grid_size(grid);
    }
    VecC values() const;
    VecR real_values() const;

    /// Coefficient at Miller index m (zero when m is off the grid).
    cplx coeff(const Index3& m) const;
    void set_coeff(const Index3& m, cplx c);

    /// Cartesian position of grid point `slot`.
    VecR point(size_t slot) const;
    /// Cartesian wave vector of coefficient `slot`.
    VecR wavevector(size_t slot) const
    {
        return lattice.gvec(fft_freq(grid, slot));
    }

    double mean() const
    {
        return coeffs.size() ? coeffs[0].real() : 0.0;
    }
    double integral() const
    {
        return lattice.volume * mean();
    }
    /// L2 norm over one cell.
    double l2_norm() const;
    /// Homogeneous H1 seminorm over one cell.
    double h1_seminorm() const;
    /// H2 norm over one cell, (1 + |G|^2)^2 weights.
    double h2_norm() const;
    /// Maximum |c(-G) - conj c(G)|.
    double realness_defect() const;
    /// Project onto real fields.
    void make_real();

    /// Same function on another grid (spectral truncation or zero padding).
    PeriodicField regrid(const Index3& g) const;

    PeriodicField& operator+=(const PeriodicField& o);
    PeriodicField& operator-=(const PeriodicField& o);
    PeriodicField& operator*=(double s);
};

PeriodicField operator+(PeriodicField a, const PeriodicField& b);
PeriodicField operator-(PeriodicField a, const PeriodicField& b);
PeriodicField operator*(double s, PeriodicField a);

/// Cell inner product int_Omega conj(f) g.
cplx inner(const PeriodicField& f, const PeriodicField& g);

/// Field on an N-fold supercell of a micro lattice.
struct SupercellField
{
    PeriodicField field; ///< on micro.supercell(N)
    Lattice micro;
    Index3 N{1, 1, 1};

    SupercellField() = default;
    SupercellField(const Lattice& micro_, const Index3& N_, const Index3& g, bool is_real = true);
    SupercellField(const PeriodicField& f, const Lattice& micro_, const Index3& N_);

    int dim() const
    {
        return micro.d;
    }
    /// Number of supercell k-points, prod N_i.
    int nk() const;
};

enum class TransformDirection
{
    to_grid,
    to_coeffs
};

/// Grid values (to_grid) or coefficients (to_coeffs) as a plain array.
VecC transform(const PeriodicField& f, TransformDirection dir, const VecC& data = VecC());

/// One Bloch fiber f_k of a supercell field.
struct BlochComponent
{
    Index3 kindex;   ///< centered integer label, k = sum_i kindex_i / N_i omega*_i
    VecR kfrac;      ///< fractional reciprocal coordinates
    VecR k;          ///< Cartesian
    PeriodicField fk; ///< periodic on the micro lattice
};

/// Per-cell normalized fibers f_k(x) = N^{-d} sum_{t in L / N L} e^{-ik.(x+t)} f(x+t), so (f_k)(G) = f_sc(k+G)
/// and a micro-periodic f has f_0 = f.
std::vector<BlochComponent> bloch_decompose(const SupercellField& f, const Index3& micro_grid = {0, 0, 0});
/// f(x) = sum_k e^{ik.x} f_k(x).
SupercellField bloch_reconstruct(const std::vector<BlochComponent>& comps, const Lattice& micro, const Index3& N,
                                 const Index3& grid);
/// Centered label of supercell Miller index q: q = N*G + j with j in (-N/2, N/2].
void split_supercell_index(const Index3& q, const Index3& N, Index3& G, Index3& j);

/// Per-cell transform N^{-d} int_{supercell} e^{-ik.x} f(x) dx at supercell reciprocal point k;
/// equals int_Omega f_k.
cplx fourier_at(const SupercellField& f, const Index3& supercell_miller);

/// Radius of the largest ball centered at 0 inside the Brillouin zone of `lat`.
double inscribed_bz_radius(const Lattice& lat);

/// Zero all modes with |q| > r. Warns when B(r) leaves the micro Brillouin zone.
PeriodicField low_momentum_project(const PeriodicField& f, double r, const Lattice* micro = nullptr);
SupercellField low_momentum_project(const SupercellField& f, double r);

enum class RescaleDirection
{
    micro_to_macro,
    macro_to_micro
};

/// Named amplitude conventions for f(x) -> s f(x / delta).
enum class Scaling
{
    unitary,   ///< s = delta^{-d/2}
    density,   ///< s = delta^{-d}, preserves total charge
    potential  ///< s = delta^{2-d}, keeps -Laplace(phi) = kappa under the density scaling
};

/// Amplitude factor s for a scaling kind in dimension d.
double rescale_factor(Scaling kind, double delta, int d);
/// micro_to_macro: g(y) -> s g(x/delta) on lattice delta*L; macro_to_micro is the inverse.
PeriodicField rescale_field(const PeriodicField& f, double delta, RescaleDirection dir,
                            Scaling kind = Scaling::unitary);

/// phi with -Laplace(phi) = f and zero mean; refuses |mean(f)| > tol_mean.
PeriodicField apply_inverse_laplacian(const PeriodicField& f, double tol_mean = 1e-10);
SupercellField apply_inverse_laplacian(const SupercellField& f, double tol_mean = 1e-10);
/// -Laplace(f).
PeriodicField apply_neg_laplacian(const PeriodicField& f);

/// Coefficients at the listed Miller indices.
VecC gather(const PeriodicField& f, const std::vector<Index3>& ms);
/// Field with the listed coefficients and zeros elsewhere.
PeriodicField scatter(const Lattice& lat, const Index3& grid, const std::vector<Index3>& ms, const VecC& c,
                      bool is_real = true);

} // namespace debye
