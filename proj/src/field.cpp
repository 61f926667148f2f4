// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file field.cpp
 *  \brief Periodic/supercell fields and Bloch machinery.
 */

#include "debye/field.hpp"
#include "debye/errors.hpp"
#include "debye/log.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace debye {

// ---------------------------------------------------------------------------
// PeriodicField

PeriodicField::PeriodicField(const Lattice& lat, const Index3& g, bool is_real)
    : lattice(lat)
    , grid(g)
    , coeffs(VecC::Zero(grid_size(g)))
    , real(is_real)
{
    for (int i = lat.d; i < 3; i++) {
        if (grid[i] != 1) {
            throw ConfigError("grid extent beyond the lattice dimension must be 1");
        }
    }
}

PeriodicField PeriodicField::from_values(const Lattice& lat, const Index3& g, const VecC& values, bool is_real)
{
    PeriodicField f(lat, g, is_real);
    if (static_cast<size_t>(values.size()) != f.size()) {
        throw ConfigError("grid/coefficient shape mismatch");
    }
    fft_to_coeffs(g, values.data(), f.coeffs.data());
    if (is_real) {
        f.make_real();
    }
    return f;
}

PeriodicField PeriodicField::from_real_values(const Lattice& lat, const Index3& g, const VecR& values)
{
    return from_values(lat, g, values.cast<cplx>(), true);
}

VecC PeriodicField::values() const
{
    VecC v(coeffs.size());
    fft_to_grid(grid, coeffs.data(), v.data());
    return v;
}

VecR PeriodicField::real_values() const
{
    return values().real();
}

cplx PeriodicField::coeff(const Index3& m) const
{
    long s = fft_slot(grid, m);
    return s < 0 ? cplx(0) : coeffs[s];
}

void PeriodicField::set_coeff(const Index3& m, cplx c)
{
    long s = fft_slot(grid, m);
    if (s < 0) {
        throw ConfigError("Miller index outside the field grid");
    }
    coeffs[s] = c;
}

VecR PeriodicField::point(size_t slot) const
{
    VecR x = VecR::Zero(lattice.d);
    size_t r = slot;
    Index3 j{0, 0, 0};
    for (int i = 2; i >= 0; i--) {
        j[i] = static_cast<int>(r % grid[i]);
        r /= grid[i];
    }
    for (int i = 0; i < lattice.d; i++) {
        x += (static_cast<double>(j[i]) / grid[i]) * lattice.basis.col(i);
    }
    return x;
}

double PeriodicField::l2_norm() const
{
    return std::sqrt(lattice.volume * coeffs.squaredNorm());
}

double PeriodicField::h1_seminorm() const
{
    double s = 0;
    for (size_t i = 0; i < size(); i++) {
        s += wavevector(i).squaredNorm() * std::norm(coeffs[i]);
    }
    return std::sqrt(lattice.volume * s);
}

double PeriodicField::h2_norm() const
{
    double s = 0;
    for (size_t i = 0; i < size(); i++) {
        double w = 1 + wavevector(i).squaredNorm();
        s += w * w * std::norm(coeffs[i]);
    }
    return std::sqrt(lattice.volume * s);
}

namespace {

// FFT-order position of the frequency -m, taken modulo the grid.
size_t partner_slot(const Index3& n, size_t slot)
{
    Index3 j{0, 0, 0};
    for (int i = 2; i >= 0; i--) {
        j[i] = static_cast<int>(slot % n[i]);
        slot /= n[i];
    }
    size_t s = 0;
    for (int i = 0; i < 3; i++) {
        s = s * n[i] + (n[i] - j[i]) % n[i];
    }
    return s;
}

} // namespace

double PeriodicField::realness_defect() const
{
    double e = 0;
    for (size_t i = 0; i < size(); i++) {
        e = std::max(e, std::abs(coeffs[partner_slot(grid, i)] - std::conj(coeffs[i])));
    }
    return e;
}

void PeriodicField::make_real()
{
    VecC c = coeffs;
    for (size_t i = 0; i < size(); i++) {
        coeffs[i] = 0.5 * (c[i] + std::conj(c[partner_slot(grid, i)]));
    }
    real = true;
}

PeriodicField PeriodicField::regrid(const Index3& g) const
{
    PeriodicField out(lattice, g, real);
    for (size_t i = 0; i < size(); i++) {
        long s = fft_slot(g, fft_freq(grid, i));
        if (s >= 0) {
            out.coeffs[s] = coeffs[i];
        }
    }
    return out;
}

namespace {
void check_same(const PeriodicField& a, const PeriodicField& b)
{
    if (a.grid != b.grid || a.coeffs.size() != b.coeffs.size()) {
        throw ConfigError("field grids differ");
    }
}
} // namespace

PeriodicField& PeriodicField::operator+=(const PeriodicField& o)
{
    check_same(*this, o);
    coeffs += o.coeffs;
    real = real && o.real;
    return *this;
}

PeriodicField& PeriodicField::operator-=(const PeriodicField& o)
{
    check_same(*this, o);
    coeffs -= o.coeffs;
    real = real && o.real;
    return *this;
}

PeriodicField& PeriodicField::operator*=(double s)
{
    coeffs *= s;
    return *this;
}

PeriodicField operator+(PeriodicField a, const PeriodicField& b)
{
    return a += b;
}

PeriodicField operator-(PeriodicField a, const PeriodicField& b)
{
    return a -= b;
}

PeriodicField operator*(double s, PeriodicField a)
{
    return a *= s;
}

cplx inner(const PeriodicField& f, const PeriodicField& g)
{
    check_same(f, g);
    return f.lattice.volume * f.coeffs.dot(g.coeffs);
}

VecC transform(const PeriodicField& f, TransformDirection dir, const VecC& data)
{
    if (dir == TransformDirection::to_grid) {
        return f.values();
    }
    if (static_cast<size_t>(data.size()) != f.size()) {
        throw ConfigError("grid/coefficient shape mismatch");
    }
    VecC c(data.size());
    fft_to_coeffs(f.grid, data.data(), c.data());
    return c;
}

// ---------------------------------------------------------------------------
// SupercellField and Bloch decomposition

SupercellField::SupercellField(const Lattice& micro_, const Index3& N_, const Index3& g, bool is_real)
    : field(micro_.supercell(N_), g, is_real)
    , micro(micro_)
    , N(N_)
{
}

SupercellField::SupercellField(const PeriodicField& f, const Lattice& micro_, const Index3& N_)
    : field(f)
    , micro(micro_)
    , N(N_)
{
    MatR expect = micro_.supercell(N_).basis;
    if ((expect - f.lattice.basis).norm() > 1e-10 * expect.norm()) {
        throw ConfigError("supercell basis is not the stated multiple of the micro basis");
    }
}

int SupercellField::nk() const
{
    int n = 1;
    for (int i = 0; i < micro.d; i++) {
        n *= N[i];
    }
    return n;
}

void split_supercell_index(const Index3& q, const Index3& N, Index3& G, Index3& j)
{
    for (int i = 0; i < 3; i++) {
        int n = std::max(N[i], 1);
        int r = ((q[i] % n) + n) % n;
        if (2 * r > n) {
            r -= n;
        }
        j[i] = r;
        G[i] = (q[i] - r) / n;
    }
}

namespace {

std::vector<Index3> k_labels(const Index3& N, int d)
{
    std::vector<Index3> out;
    auto range = [&](int i) {
        int n = i < d ? N[i] : 1;
        std::vector<int> v;
        for (int r = 0; r < n; r++) {
            v.push_back(2 * r > n ? r - n : r);
        }
        std::sort(v.begin(), v.end());
        return v;
    };
    for (int a : range(0)) {
        for (int b : range(1)) {
            for (int c : range(2)) {
                out.push_back({a, b, c});
            }
        }
    }
    return out;
}

} // namespace

std::vector<BlochComponent> bloch_decompose(const SupercellField& f, const Index3& micro_grid)
{
    const int d = f.micro.d;
    Index3 N = f.N;
    for (int i = d; i < 3; i++) {
        N[i] = 1;
    }
    Index3 mg = micro_grid;
    if (mg[0] == 0) {
        for (int i = 0; i < 3; i++) {
            if (i < d) {
                int half = f.field.grid[i] / 2;
                int gmax = (half + N[i]) / N[i] + 1;
                mg[i] = good_fft_size(2 * gmax + 1);
            } else {
                mg[i] = 1;
            }
        }
    }
    auto labels = k_labels(N, d);
    int nk = static_cast<int>(labels.size());
    std::vector<BlochComponent> out;
    out.reserve(nk);
    for (auto& j : labels) {
        BlochComponent c;
        c.kindex = j;
        c.kfrac = VecR::Zero(d);
        for (int i = 0; i < d; i++) {
            c.kfrac[i] = static_cast<double>(j[i]) / N[i];
        }
        c.k = f.micro.kcart(c.kfrac);
        c.fk = PeriodicField(f.micro, mg, false);
        out.push_back(std::move(c));
    }
    // lookup by linear search over the small label list
    auto find = [&](const Index3& j) {
        for (int i = 0; i < nk; i++) {
            if (labels[i] == j) {
                return i;
            }
        }
        return -1;
    };
    for (size_t s = 0; s < f.field.size(); s++) {
        cplx c = f.field.coeffs[s];
        if (c == cplx(0)) {
            continue;
        }
        Index3 q = fft_freq(f.field.grid, s);
        Index3 G, j;
        split_supercell_index(q, N, G, j);
        int pos = find(j);
        long t = fft_slot(mg, G);
        if (pos < 0 || t < 0) {
            throw ConfigError("bloch_decompose: micro grid too small for the supercell field");
        }
        out[pos].fk.coeffs[t] = c;
    }
    return out;
}

SupercellField bloch_reconstruct(const std::vector<BlochComponent>& comps, const Lattice& micro, const Index3& N_,
                                 const Index3& grid)
{
    const int d = micro.d;
    Index3 N = N_;
    for (int i = d; i < 3; i++) {
        N[i] = 1;
    }
    SupercellField f(micro, N, grid, false);
    for (auto& c : comps) {
        for (int i = 0; i < d; i++) {
            int n = N[i];
            if (c.kindex[i] * 2 > n || c.kindex[i] * 2 <= -n) {
                throw ConfigError("bloch_reconstruct: k not on the commensurate grid");
            }
        }
        for (size_t t = 0; t < c.fk.size(); t++) {
            cplx v = c.fk.coeffs[t];
            if (v == cplx(0)) {
                continue;
            }
            Index3 G = fft_freq(c.fk.grid, t);
            Index3 q{0, 0, 0};
            for (int i = 0; i < 3; i++) {
                q[i] = N[i] * G[i] + c.kindex[i];
            }
            long s = fft_slot(grid, q);
            if (s < 0) {
                throw ConfigError("bloch_reconstruct: supercell grid too small");
            }
            f.field.coeffs[s] = v;
        }
    }
    return f;
}

cplx fourier_at(const SupercellField& f, const Index3& q)
{
    return f.micro.volume * f.field.coeff(q);
}

// ---------------------------------------------------------------------------
// Momentum projection

double inscribed_bz_radius(const Lattice& lat)
{
    double rmax = 0;
    for (int i = 0; i < lat.d; i++) {
        rmax = std::max(rmax, lat.reciprocal.col(i).norm());
    }
    double best = rmax;
    for (auto& m : sphere_points(lat, rmax * rmax)) {
        double g = lat.gvec(m).norm();
        if (g > 0) {
            best = std::min(best, g);
        }
    }
    return 0.5 * best;
}

PeriodicField low_momentum_project(const PeriodicField& f, double r, const Lattice* micro)
{
    if (micro != nullptr && r > inscribed_bz_radius(*micro) * (1 + 1e-12)) {
        std::ostringstream os;
        os << "projection radius " << r << " exceeds the micro Brillouin-zone inscribed radius";
        warn(os.str());
    }
    PeriodicField out = f;
    double r2 = r * r * (1 + 1e-12);
    for (size_t i = 0; i < f.size(); i++) {
        if (f.wavevector(i).squaredNorm() > r2) {
            out.coeffs[i] = 0;
        }
    }
    return out;
}

SupercellField low_momentum_project(const SupercellField& f, double r)
{
    SupercellField out = f;
    out.field = low_momentum_project(f.field, r, &f.micro);
    return out;
}

// ---------------------------------------------------------------------------
// Rescaling

double rescale_factor(Scaling kind, double delta, int d)
{
    switch (kind) {
    case Scaling::unitary:
        return std::pow(delta, -0.5 * d);
    case Scaling::density:
        return std::pow(delta, -static_cast<double>(d));
    case Scaling::potential:
        return std::pow(delta, 2.0 - d);
    }
    return 1;
}

PeriodicField rescale_field(const PeriodicField& f, double delta, RescaleDirection dir, Scaling kind)
{
    if (!(delta > 0) || delta > 1) {
        throw ConfigError("scale ratio delta must lie in (0, 1]");
    }
    double n = 1 / delta;
    if (std::abs(n - std::round(n)) > 1e-9 * n) {
        throw ConfigError("non-commensurate scale ratio: 1/delta must be an integer");
    }
    double s = rescale_factor(kind, delta, f.lattice.d);
    PeriodicField out = f;
    if (dir == RescaleDirection::micro_to_macro) {
        out.lattice = f.lattice.scaled(delta);
        out.coeffs *= s;
    } else {
        out.lattice = f.lattice.scaled(1 / delta);
        out.coeffs /= s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Poisson

PeriodicField apply_inverse_laplacian(const PeriodicField& f, double tol_mean)
{
    if (std::abs(f.coeffs[0]) > tol_mean) {
        std::ostringstream os;
        os << "solvability violation: source cell mean " << std::abs(f.coeffs[0])
           << " exceeds " << tol_mean << "; the periodic Poisson equation needs a neutral cell";
        throw SolvabilityError(os.str());
    }
    PeriodicField out = f;
    out.coeffs[0] = 0;
    for (size_t i = 1; i < f.size(); i++) {
        out.coeffs[i] = f.coeffs[i] / f.wavevector(i).squaredNorm();
    }
    return out;
}

SupercellField apply_inverse_laplacian(const SupercellField& f, double tol_mean)
{
    SupercellField out = f;
    out.field = apply_inverse_laplacian(f.field, tol_mean);
    return out;
}

PeriodicField apply_neg_laplacian(const PeriodicField& f)
{
    PeriodicField out = f;
    for (size_t i = 0; i < f.size(); i++) {
        out.coeffs[i] = f.coeffs[i] * f.wavevector(i).squaredNorm();
    }
    return out;
}

VecC gather(const PeriodicField& f, const std::vector<Index3>& ms)
{
    VecC c(ms.size());
    for (size_t j = 0; j < ms.size(); j++) {
        c[j] = f.coeff(ms[j]);
    }
    return c;
}

PeriodicField scatter(const Lattice& lat, const Index3& grid, const std::vector<Index3>& ms, const VecC& c,
                      bool is_real)
{
    PeriodicField f(lat, grid, is_real);
    for (size_t j = 0; j < ms.size(); j++) {
        f.set_coeff(ms[j], c[j]);
    }
    return f;
}

} // namespace debye
