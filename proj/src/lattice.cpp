// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file lattice.cpp
 *  \brief Lattice geometry and G-set enumeration.
 */

#include "debye/lattice.hpp"
#include "debye/errors.hpp"

#include <algorithm>
#include <set>
#include <cmath>

namespace debye {

MatR reciprocal_lattice(const MatR& basis)
{
    if (basis.rows() != basis.cols() || basis.rows() < 1 || basis.rows() > 3) {
        throw DegenerateLatticeError("lattice basis must be a square matrix of size 1..3");
    }
    double scale = 1;
    for (int i = 0; i < basis.cols(); i++) {
        scale *= basis.col(i).norm();
    }
    double det = basis.determinant();
    if (!(scale > 0) || !std::isfinite(det) || std::abs(det) < 1e-12 * scale) {
        throw DegenerateLatticeError("degenerate lattice: basis vectors are linearly dependent");
    }
    return 2 * pi * basis.inverse().transpose();
}

Lattice::Lattice(const MatR& basis_)
    : d(static_cast<int>(basis_.rows()))
    , basis(basis_)
    , reciprocal(reciprocal_lattice(basis_))
    , volume(std::abs(basis_.determinant()))
{
}

Lattice Lattice::supercell(const Index3& n) const
{
    MatR b = basis;
    for (int i = 0; i < d; i++) {
        if (n[i] < 1) {
            throw ConfigError("supercell factors must be >= 1");
        }
        b.col(i) *= n[i];
    }
    return Lattice(b);
}

Lattice Lattice::scaled(double s) const
{
    return Lattice(basis * s);
}

VecR Lattice::gvec(const Index3& m) const
{
    VecR g = VecR::Zero(d);
    for (int i = 0; i < d; i++) {
        g += m[i] * reciprocal.col(i);
    }
    return g;
}

double Lattice::min_reciprocal_length() const
{
    double r = reciprocal.col(0).norm();
    for (int i = 1; i < d; i++) {
        r = std::min(r, reciprocal.col(i).norm());
    }
    return r;
}

std::vector<Index3> sphere_points(const Lattice& lat, double radius2)
{
    // |n_i| = |G . omega_i| / 2pi <= |G| |omega_i| / 2pi
    Index3 bound{0, 0, 0};
    double radius = std::sqrt(std::max(radius2, 0.0));
    for (int i = 0; i < lat.d; i++) {
        bound[i] = static_cast<int>(std::floor(radius * lat.basis.col(i).norm() / (2 * pi) + 1e-9)) + 1;
    }
    double tol = 1e-12 * std::max(radius2, 1.0);
    std::vector<std::pair<double, Index3>> pts;
    for (int a = -bound[0]; a <= bound[0]; a++) {
        for (int b = -bound[1]; b <= bound[1]; b++) {
            for (int c = -bound[2]; c <= bound[2]; c++) {
                Index3 m{a, b, c};
                double g2 = lat.gvec(m).squaredNorm();
                if (g2 <= radius2 + tol) {
                    pts.push_back({g2, m});
                }
            }
        }
    }
    std::sort(pts.begin(), pts.end(), [tol](const auto& x, const auto& y) {
        if (std::abs(x.first - y.first) > tol) {
            return x.first < y.first;
        }
        return x.second < y.second;
    });
    std::vector<Index3> out;
    out.reserve(pts.size());
    for (auto& p : pts) {
        out.push_back(p.second);
    }
    return out;
}

int good_fft_size(int n)
{
    for (int m = std::max(n, 1);; m++) {
        int r = m;
        for (int p : {2, 3, 5, 7}) {
            while (r % p == 0) {
                r /= p;
            }
        }
        if (r == 1) {
            return m;
        }
    }
}

namespace {

void sort_by_length(const Lattice& lat, std::vector<Index3>& ms)
{
    std::vector<std::pair<double, Index3>> pts;
    pts.reserve(ms.size());
    double g2max = 0;
    for (auto& m : ms) {
        double g2 = lat.gvec(m).squaredNorm();
        g2max = std::max(g2max, g2);
        pts.push_back({g2, m});
    }
    double tol = 1e-12 * std::max(g2max, 1.0);
    std::sort(pts.begin(), pts.end(), [tol](const auto& x, const auto& y) {
        if (std::abs(x.first - y.first) > tol) {
            return x.first < y.first;
        }
        return x.second < y.second;
    });
    for (size_t j = 0; j < pts.size(); j++) {
        ms[j] = pts[j].second;
    }
}

} // namespace

PlaneWaveBasis::PlaneWaveBasis(const Lattice& lat, double ecut_)
    : lattice(lat)
    , ecut(ecut_)
{
    if (!(ecut > 0)) {
        throw ConfigError("E_cut must be positive");
    }
    miller = sphere_points(lat, 2 * ecut);
    // products of two wave functions live in |G| <= 2 G_max
    dens_miller = sphere_points(lat, 8 * ecut);
    finish();
}

PlaneWaveBasis PlaneWaveBasis::tiled(const PlaneWaveBasis& micro, const Index3& n)
{
    const Lattice& ml = micro.lattice;
    Index3 f{1, 1, 1};
    for (int i = 0; i < ml.d; i++) {
        if (n[i] < 1) {
            throw ConfigError("supercell factors must be >= 1");
        }
        f[i] = n[i];
    }
    PlaneWaveBasis b;
    b.lattice = ml.supercell(f);
    b.ecut = micro.ecut;
    // q = N G + j with j the centered fiber labels
    std::vector<Index3> labels;
    for (int a = 0; a < f[0]; a++) {
        for (int c = 0; c < f[1]; c++) {
            for (int e = 0; e < f[2]; e++) {
                Index3 j{a, c, e};
                for (int i = 0; i < 3; i++) {
                    if (2 * j[i] > f[i]) {
                        j[i] -= f[i];
                    }
                }
                labels.push_back(j);
            }
        }
    }
    std::set<Index3> wf;
    for (auto& g : micro.miller) {
        for (auto& j : labels) {
            Index3 q;
            for (int i = 0; i < 3; i++) {
                q[i] = f[i] * g[i] + j[i];
            }
            wf.insert(q);
        }
    }
    b.miller.assign(wf.begin(), wf.end());
    sort_by_length(b.lattice, b.miller);
    std::set<Index3> dens;
    for (auto& x : b.miller) {
        for (auto& y : b.miller) {
            dens.insert(Index3{x[0] - y[0], x[1] - y[1], x[2] - y[2]});
        }
    }
    b.dens_miller.assign(dens.begin(), dens.end());
    sort_by_length(b.lattice, b.dens_miller);
    b.finish();
    return b;
}

void PlaneWaveBasis::finish()
{
    auto fill = [&](const std::vector<Index3>& ms) {
        MatR g(lattice.d, ms.size());
        for (size_t j = 0; j < ms.size(); j++) {
            g.col(j) = lattice.gvec(ms[j]);
        }
        return g;
    };
    gcart = fill(miller);
    dens_gcart = fill(dens_miller);
    max_index = {0, 0, 0};
    for (auto& m : dens_miller) {
        for (int i = 0; i < 3; i++) {
            max_index[i] = std::max(max_index[i], std::abs(m[i]));
        }
    }
    // holds products of two wave functions exactly; potential times wave
    // function never aliases back into the wave-function G-set
    for (int i = 0; i < 3; i++) {
        fft_grid[i] = i < lattice.d ? good_fft_size(2 * max_index[i] + 1) : 1;
    }
    int tot = 1;
    for (int i = 0; i < 3; i++) {
        tot *= 2 * max_index[i] + 1;
    }
    dens_lookup_.assign(tot, -1);
    wf_lookup_.assign(tot, -1);
    for (size_t j = 0; j < dens_miller.size(); j++) {
        dens_lookup_[lookup_slot(dens_miller[j])] = static_cast<int>(j);
    }
    for (size_t j = 0; j < miller.size(); j++) {
        wf_lookup_[lookup_slot(miller[j])] = static_cast<int>(j);
    }
}

int PlaneWaveBasis::lookup_slot(const Index3& m) const
{
    int s = 0;
    for (int i = 0; i < 3; i++) {
        if (std::abs(m[i]) > max_index[i]) {
            return -1;
        }
        s = s * (2 * max_index[i] + 1) + (m[i] + max_index[i]);
    }
    return s;
}

int PlaneWaveBasis::dens_index(const Index3& m) const
{
    int s = lookup_slot(m);
    return s < 0 ? -1 : dens_lookup_[s];
}

int PlaneWaveBasis::index(const Index3& m) const
{
    int s = lookup_slot(m);
    return s < 0 ? -1 : wf_lookup_[s];
}

} // namespace debye
