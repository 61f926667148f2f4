// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file bands.cpp
 *  \brief Fiber assembly, eigensolves, densities and gaps.
 */

#include "debye/bands.hpp"
#include "debye/errors.hpp"
#include "debye/log.hpp"
#include "debye/parallel.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace debye {

// ---------------------------------------------------------------------------
// k-grids

KGrid::KGrid(const Lattice& lat, const Index3& n_)
    : n(n_)
{
    for (int i = lat.d; i < 3; i++) {
        n[i] = 1;
    }
    for (int i = 0; i < lat.d; i++) {
        if (n[i] < 1) {
            throw ConfigError("k-grid sizes must be >= 1");
        }
    }
    auto range = [&](int i) {
        std::vector<int> v;
        for (int r = 0; r < n[i]; r++) {
            v.push_back(2 * r > n[i] ? r - n[i] : r);
        }
        std::sort(v.begin(), v.end());
        return v;
    };
    for (int a : range(0)) {
        for (int b : range(1)) {
            for (int c : range(2)) {
                Index3 j{a, b, c};
                VecR f(lat.d);
                for (int i = 0; i < lat.d; i++) {
                    f[i] = static_cast<double>(j[i]) / n[i];
                }
                labels.push_back(j);
                kfrac.push_back(f);
                kcart.push_back(lat.kcart(f));
            }
        }
    }
}

int KGrid::gamma_index() const
{
    for (int i = 0; i < size(); i++) {
        if (labels[i] == Index3{0, 0, 0}) {
            return i;
        }
    }
    return -1;
}

// ---------------------------------------------------------------------------
// Fibers

FiberHamiltonian assemble_fiber(const PlaneWaveBasis& basis, const PeriodicField& phi, const VecR& k_in, bool reduce)
{
    const Lattice& lat = basis.lattice;
    VecR k = k_in;
    if (reduce) {
        VecR f = lat.kfrac(k);
        bool outside = false;
        for (int i = 0; i < lat.d; i++) {
            if (std::abs(f[i]) > 0.5 + 1e-12) {
                outside = true;
                f[i] -= std::round(f[i]);
            }
        }
        if (outside) {
            warn("k outside the Brillouin cell reduced modulo the reciprocal lattice");
            k = lat.kcart(f);
        }
    }
    const int n = basis.size();
    FiberHamiltonian h;
    h.k = k;
    h.H = MatC::Zero(n, n);
    for (int j = 0; j < n; j++) {
        for (int i = 0; i < n; i++) {
            Index3 dm{basis.miller[i][0] - basis.miller[j][0], basis.miller[i][1] - basis.miller[j][1],
                      basis.miller[i][2] - basis.miller[j][2]};
            h.H(i, j) = -phi.coeff(dm);
        }
        h.H(j, j) += (basis.gcart.col(j) + k).squaredNorm();
    }
    return h;
}

void hermitian_eigensolve(const MatC& a, VecR& eval, MatC& evec)
{
    const int n = static_cast<int>(a.rows());
    evec = a;
    eval.resize(n);
    if (n == 0) {
        return;
    }
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, reinterpret_cast<lapack_complex_double*>(evec.data()),
                                     n, eval.data());
    if (info != 0) {
        MatC herm = a - a.adjoint();
        std::ostringstream os;
        os << "eigensolver failure (zheevd info " << info << "), dimension " << n << ", norm " << a.norm()
           << ", hermiticity defect " << herm.cwiseAbs().maxCoeff();
        throw NumericalError(os.str());
    }
}

FiberEigen diagonalize_fiber(const FiberHamiltonian& h)
{
    FiberEigen e;
    e.k = h.k;
    hermitian_eigensolve(h.H, e.eval, e.evec);
    return e;
}

double BandStructure::min_eigenvalue() const
{
    double m = std::numeric_limits<double>::infinity();
    for (auto& f : fibers) {
        m = std::min(m, f.eval.minCoeff());
    }
    return m;
}

double BandStructure::max_eigenvalue() const
{
    double m = -std::numeric_limits<double>::infinity();
    for (auto& f : fibers) {
        m = std::max(m, f.eval.maxCoeff());
    }
    return m;
}

void refine_eigenpairs(const MatC& H, FiberEigen& e, double below, double cluster)
{
    const int n = static_cast<int>(e.eval.size());
    int count = 0;
    while (count < n && e.eval[count] < below) {
        count++;
    }
    if (count == 0) {
        return;
    }
    using cld = std::complex<long double>;
    MatC R(n, count);
    for (int c = 0; c < count; c++) {
        const auto v = e.evec.col(c);
        const long double lam = e.eval[c];
        for (int i = 0; i < n; i++) {
            cld acc = -lam * cld(v[i]);
            for (int j = 0; j < n; j++) {
                acc += cld(H(i, j)) * cld(v[j]);
            }
            R(i, c) = cplx(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
        }
    }
    MatC C = e.evec.adjoint() * R;
    for (int c = 0; c < count; c++) {
        e.eval[c] += C(c, c).real();
        for (int m = 0; m < n; m++) {
            double gap = e.eval[m] - e.eval[c];
            C(m, c) = (m == c || std::abs(gap) < cluster) ? cplx(0) : -C(m, c) / gap;
        }
    }
    e.evec.leftCols(count) += e.evec * C;
    for (int c = 0; c < count; c++) {
        e.evec.col(c).normalize();
    }
}

BandStructure compute_bands(const PlaneWaveBasis& basis, const PeriodicField& phi, const KGrid& kgrid,
                            double refine_below)
{
    BandStructure b;
    b.kgrid = kgrid;
    b.fibers.resize(kgrid.size());
    parallel_for(kgrid.size(), [&](int i) {
        FiberHamiltonian h = assemble_fiber(basis, phi, kgrid.kcart[i], false);
        b.fibers[i] = diagonalize_fiber(h);
        if (refine_below > -std::numeric_limits<double>::infinity()) {
            refine_eigenpairs(h.H, b.fibers[i], refine_below);
        }
    });
    return b;
}

// ---------------------------------------------------------------------------
// Densities

ChargeCount charge_count(const BandStructure& bands, const OccupationModel& occ)
{
    ChargeCount c;
    const double nk = static_cast<double>(bands.fibers.size());
    for (auto& f : bands.fibers) {
        long below = 0;
        double th = 0;
        for (int n = 0; n < f.eval.size(); n++) {
            double lam = f.eval[n] - occ.mu;
            if (lam < 0) {
                below++;
                th -= fermi_dirac(-lam, occ, 0);
            } else {
                th += fermi_dirac(lam, occ, 0);
            }
        }
        c.below += static_cast<double>(below) / nk;
        c.thermal += th / nk;
    }
    return c;
}

DensityResult density_from_bands(const PlaneWaveBasis& basis, const BandStructure& bands, const OccupationModel& occ)
{
    const Index3 grid = basis.fft_grid;
    const size_t ng = grid_size(grid);
    const int nk = static_cast<int>(bands.fibers.size());
    const int nb = basis.size();
    std::vector<long> slots(nb);
    for (int i = 0; i < nb; i++) {
        slots[i] = fft_slot(grid, basis.miller[i]);
    }
    std::vector<VecR> partial(nk, VecR::Zero(ng));
    std::vector<double> tails(nk, 0);
    parallel_for(nk, [&](int ik) {
        const FiberEigen& f = bands.fibers[ik];
        VecC c(ng), u(ng);
        tails[ik] = fermi_dirac(f.eval[f.eval.size() - 1] - occ.mu, occ, 0);
        for (int n = 0; n < f.eval.size(); n++) {
            double w = fermi_dirac(f.eval[n] - occ.mu, occ, 0);
            if (w == 0) {
                continue;
            }
            c.setZero();
            for (int i = 0; i < nb; i++) {
                c[slots[i]] = f.evec(i, n);
            }
            fft_to_grid(grid, c.data(), u.data());
            partial[ik] += w * u.cwiseAbs2();
        }
    });
    VecR rho = VecR::Zero(ng);
    double tail = 0;
    for (int ik = 0; ik < nk; ik++) {
        rho += partial[ik];
        tail = std::max(tail, tails[ik]);
    }
    rho /= (nk * basis.lattice.volume);
    DensityResult r;
    r.rho = PeriodicField::from_real_values(basis.lattice, grid, rho);
    r.count = charge_count(bands, occ);
    r.charge = r.count.total();
    r.tail_weight = tail;
    r.cutoff_too_low = tail > 1e-12;
    if (r.cutoff_too_low) {
        std::ostringstream os;
        os << "band-sum truncation: top band occupation " << tail << " exceeds 1e-12; raise E_cut";
        warn(os.str());
    }
    return r;
}

DensityResult density_from_potential(const PlaneWaveBasis& basis, const PeriodicField& phi,
                                     const OccupationModel& occ, const KGrid& kgrid, BandStructure* bands)
{
    BandStructure b = compute_bands(basis, phi, kgrid);
    DensityResult r = density_from_bands(basis, b, occ);
    if (bands != nullptr) {
        *bands = std::move(b);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Gaps

GapReport spectral_gap(const BandStructure& bands, double mu)
{
    GapReport g;
    const double inf = std::numeric_limits<double>::infinity();
    g.eta = inf;
    g.eta0 = inf;
    g.edge_below = -inf;
    g.edge_above = inf;
    int gi = bands.kgrid.gamma_index();
    int min_below = std::numeric_limits<int>::max();
    int max_below = 0;
    for (size_t ik = 0; ik < bands.fibers.size(); ik++) {
        const VecR& e = bands.fibers[ik].eval;
        int below = 0;
        for (int n = 0; n < e.size(); n++) {
            double dist = std::abs(e[n] - mu);
            g.eta = std::min(g.eta, dist);
            if (static_cast<int>(ik) == gi) {
                g.eta0 = std::min(g.eta0, dist);
            }
            if (e[n] < mu) {
                below++;
                g.edge_below = std::max(g.edge_below, e[n]);
            } else {
                g.edge_above = std::min(g.edge_above, e[n]);
            }
        }
        min_below = std::min(min_below, below);
        max_below = std::max(max_below, below);
    }
    g.bands_below = min_below;
    g.in_gap = (min_below == max_below) && g.eta > 0;
    return g;
}

double gap_center(const BandStructure& bands, int gap_index)
{
    if (gap_index < 1) {
        throw ConfigError("gap index must be >= 1");
    }
    double top = -std::numeric_limits<double>::infinity();
    double bottom = std::numeric_limits<double>::infinity();
    for (auto& f : bands.fibers) {
        if (f.eval.size() <= gap_index) {
            throw ConfigError("gap index exceeds the number of bands");
        }
        top = std::max(top, f.eval[gap_index - 1]);
        bottom = std::min(bottom, f.eval[gap_index]);
    }
    if (!(bottom > top)) {
        throw DielectricityError("requested gap is closed on the sampled k-grid");
    }
    return 0.5 * (top + bottom);
}

} // namespace debye
