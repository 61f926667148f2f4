// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file test_bloch_operators.cpp
 *  \brief bloch-operators: Fermi calculus, fibers, densities, gaps, contour quadrature.
 */

#include "doctest.h"
#include "test_util.hpp"

#include "debye/bands.hpp"
#include "debye/contour.hpp"
#include "debye/errors.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

using namespace debye;
using debye::test::line;
using debye::test::mathieu_phi;

namespace {

/// Independent eigen-oracle: Eigen's solver on the tridiagonal Mathieu fiber at a larger cutoff.
VecR mathieu_reference(double k, int gmax)
{
    int n = 2 * gmax + 1;
    MatR h = MatR::Zero(n, n);
    for (int i = 0; i < n; i++) {
        double g = i - gmax + k;
        h(i, i) = g * g;
        if (i + 1 < n) {
            h(i, i + 1) = h(i + 1, i) = -1;
        }
    }
    Eigen::SelfAdjointEigenSolver<MatR> es(h);
    return es.eigenvalues();
}

} // namespace

// ---------------------------------------------------------------------------
// fermi_dirac

TEST_CASE("fermi_dirac: f(0) = 1/2, f'(0) = -1/(4T), f(T ln 3) = 1/4")
{
    OccupationModel occ{0.05, 0.0};
    CHECK(fermi_dirac(0.0, occ, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(fermi_dirac(0.0, occ, 1) == doctest::Approx(-1 / (4 * 0.05)).epsilon(1e-14));
    CHECK(fermi_dirac(0.05 * std::log(3.0), occ, 0) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("fermi_dirac: range, sign and parity properties; overflow safe to |lambda|/T = 1e4")
{
    OccupationModel occ{0.02, 0.0};
    for (double x : {-1e4, -300.0, -3.0, -0.01, 0.0, 0.013, 2.0, 500.0, 1e4}) {
        double lam = x * occ.T;
        double f0 = fermi_dirac(lam, occ, 0);
        CHECK(std::isfinite(f0));
        CHECK(f0 >= 0.0);
        CHECK(f0 <= 1.0);
        CHECK(f0 + fermi_dirac(-lam, occ, 0) == doctest::Approx(1.0).epsilon(1e-15));
        double f1 = fermi_dirac(lam, occ, 1);
        CHECK(std::isfinite(f1));
        CHECK(f1 <= 0.0);
        double f2 = fermi_dirac(lam, occ, 2);
        CHECK(std::isfinite(f2));
        CHECK(f2 == doctest::Approx(-fermi_dirac(-lam, occ, 2)).epsilon(1e-13));
    }
    for (double x : {-30.0, -1.0, 0.0, 2.0, 30.0}) {
        CHECK(fermi_dirac(x * occ.T, occ, 0) > 0.0);
        CHECK(fermi_dirac(x * occ.T, occ, 0) < 1.0);
        CHECK(fermi_dirac(x * occ.T, occ, 1) < 0.0);
    }
}

TEST_CASE("fermi_dirac derivatives match the logistic closed forms")
{
    OccupationModel occ{0.07, 0.0};
    double b = occ.beta();
    for (double lam : {-0.3, -0.05, 0.0, 0.02, 0.2}) {
        double g = 1 / (std::exp(b * lam) + 1), h = 1 - g;
        CHECK(fermi_dirac(lam, occ, 1) == doctest::Approx(-b * g * h).epsilon(1e-12));
        CHECK(fermi_dirac(lam, occ, 2) == doctest::Approx(b * b * g * h * (h - g)).epsilon(1e-11).scale(b * b));
        CHECK(fermi_dirac(lam, occ, 3) == doctest::Approx(-b * b * b * g * h * (1 - 6 * g * h)).epsilon(1e-11).scale(b * b * b));
    }
}

// ---------------------------------------------------------------------------
// divided differences

TEST_CASE("divided differences: coalescence, symmetry, extended-precision oracle")
{
    OccupationModel occ{0.05, 0.25};
    double a = 0.21;
    CHECK(divided_difference(occ, {a, a}) == doctest::Approx(fermi_dirac(a - 0.25, occ, 1)).epsilon(1e-14));
    CHECK(divided_difference(occ, {0.1, 0.4}) == divided_difference(occ, {0.4, 0.1}));
    // oracle values from 60-digit arithmetic
    double v = divided_difference(occ, {0.3, 0.300001});
    CHECK(std::abs(v - (-3.932220493233002510422673)) < 1e-8 * 3.93);
    CHECK(divided_difference(occ, {0.1, 0.3, 0.45}) == doctest::Approx(4.986082241550952591565442).epsilon(1e-10));
    CHECK(divided_difference(occ, {0.1, 0.3, 0.45, 0.2}) == doctest::Approx(68.06465077972009409272694).epsilon(1e-9));
    CHECK(divided_difference(occ, {0.2, 0.2, 0.31}) == doctest::Approx(-5.540256941963838561961775).epsilon(1e-10));
    CHECK(divided_difference(occ, {0.2, 0.2, 0.31, 0.2}) == doctest::Approx(114.8299326602349393321286).epsilon(1e-9));
    CHECK(divided_difference(occ, {0.24, 0.2400000003, 0.2400000007}) ==
          doctest::Approx(-4.933895927633095084042149).epsilon(1e-9));
    // all permutations agree
    double ref = divided_difference(occ, {0.1, 0.3, 0.45, 0.2});
    CHECK(divided_difference(occ, {0.45, 0.2, 0.1, 0.3}) == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("first divided differences stay accurate deep in the tails")
{
    OccupationModel occ{0.01, 0.0};
    // both far above mu: f[a,b] ~ -beta e^{-beta a} scale, no cancellation
    double v = divided_difference(occ, {3.0, 3.5});
    double oracle = (std::exp(-300.0) - std::exp(-350.0)) / (3.0 - 3.5); // f ~ e^{-x/T} exactly at this depth
    CHECK(v == doctest::Approx(oracle).epsilon(1e-12));
    double w = divided_difference(occ, {-3.0, 4.0});
    CHECK(w == doctest::Approx(-1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("step occupation: divided differences of the indicator")
{
    OccupationModel occ{0.05, 0.0, true};
    CHECK(divided_difference(occ, {-1.0, 2.0}) == doctest::Approx(-1.0 / 3.0));
    CHECK(divided_difference(occ, {-1.0, -0.5}) == 0.0);
    CHECK(divided_difference(occ, {-1.0, -1.0, 2.0}) == doctest::Approx((-1.0 / 3.0) / 3.0));
    CHECK_THROWS_AS(fermi_dirac(0.0, occ, 0), DielectricityError);
}

// ---------------------------------------------------------------------------
// fibers

TEST_CASE("assemble_fiber: free particle at k = 0 is diag(|G|^2)")
{
    PlaneWaveBasis pw(line(), 50);
    PeriodicField zero(pw.lattice, pw.fft_grid);
    auto h = assemble_fiber(pw, zero, VecR::Zero(1));
    MatC expect = MatC::Zero(pw.size(), pw.size());
    for (int i = 0; i < pw.size(); i++) {
        expect(i, i) = pw.gcart.col(i).squaredNorm();
    }
    CHECK((h.H - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assemble_fiber: 2A cos(x) gives -A on the G +- 1 off-diagonals")
{
    PlaneWaveBasis pw(line(), 20);
    auto phi = mathieu_phi(pw.lattice, pw.fft_grid, 0.7);
    VecR k(1);
    k << 0.2;
    auto h = assemble_fiber(pw, phi, k);
    double herm = (h.H - h.H.adjoint()).cwiseAbs().maxCoeff();
    CHECK(herm < 1e-12);
    for (int i = 0; i < pw.size(); i++) {
        for (int j = 0; j < pw.size(); j++) {
            int di = pw.miller[i][0] - pw.miller[j][0];
            cplx expect = (i == j) ? cplx(std::pow(pw.gcart(0, i) + 0.2, 2)) : (std::abs(di) == 1 ? cplx(-0.7) : cplx(0));
            CHECK(std::abs(h.H(i, j) - expect) < 1e-15);
        }
    }
}

TEST_CASE("assemble_fiber: H_k differs from H_0 only by the kinetic shift")
{
    std::mt19937_64 rng(1);
    MatR b(2, 2);
    b << 2.0, 0.6, 0.0, 1.7;
    PlaneWaveBasis pw(Lattice(b), 12);
    auto phi = debye::test::random_field(pw.lattice, pw.fft_grid, 4, rng);
    VecR k(2);
    k << 0.3, -0.2;
    auto h0 = assemble_fiber(pw, phi, VecR::Zero(2));
    auto hk = assemble_fiber(pw, phi, k);
    MatC d = hk.H - h0.H;
    for (int i = 0; i < pw.size(); i++) {
        double shift = (pw.gcart.col(i) + k).squaredNorm() - pw.gcart.col(i).squaredNorm();
        CHECK(std::abs(d(i, i) - shift) < 1e-12);
        d(i, i) = 0;
    }
    CHECK(d.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Mathieu k = 0 eigenvalues agree with a high-cutoff reference")
{
    PlaneWaveBasis pw(line(), 200);
    auto phi = mathieu_phi(pw.lattice, pw.fft_grid);
    auto e = diagonalize_fiber(assemble_fiber(pw, phi, VecR::Zero(1)));
    VecR ref = mathieu_reference(0.0, 60);
    CHECK(std::abs(e.eval[0] - ref[0]) < 1e-8);
    CHECK(std::abs(e.eval[1] - ref[1]) < 1e-8);
}

TEST_CASE("diagonalize_fiber: sorted diagonal, reconstruction, free-particle degeneracy")
{
    FiberHamiltonian h;
    h.k = VecR::Zero(1);
    h.H = MatC::Zero(4, 4);
    h.H.diagonal() << 3.0, -1.0, 2.0, 0.5;
    auto e = diagonalize_fiber(h);
    CHECK(e.eval[0] == -1.0);
    CHECK(e.eval[1] == 0.5);
    CHECK(e.eval[2] == 2.0);
    CHECK(e.eval[3] == 3.0);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    MatC a(30, 30);
    for (int i = 0; i < 30; i++) {
        for (int j = 0; j < 30; j++) {
            a(i, j) = cplx(nd(rng), nd(rng));
        }
    }
    h.H = a + a.adjoint();
    e = diagonalize_fiber(h);
    MatC rec = e.evec * e.eval.asDiagonal() * e.evec.adjoint();
    CHECK((rec - h.H).norm() <= 1e-10 * h.H.norm());
    CHECK((e.evec.adjoint() * e.evec - MatC::Identity(30, 30)).cwiseAbs().maxCoeff() < 1e-10);

    PlaneWaveBasis pw(line(), 10);
    PeriodicField zero(pw.lattice, pw.fft_grid);
    e = diagonalize_fiber(assemble_fiber(pw, zero, VecR::Zero(1)));
    CHECK(e.eval[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.eval[2] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.eval[3] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(e.eval[4] == doctest::Approx(4.0).epsilon(1e-14));
}

// ---------------------------------------------------------------------------
// densities and gaps

TEST_CASE("free-particle density is constant and equals the scalar k,G sum")
{
    PlaneWaveBasis pw(line(), 60);
    PeriodicField zero(pw.lattice, pw.fft_grid);
    OccupationModel occ{0.05, -1.0};
    KGrid kg(pw.lattice, {8, 1, 1});
    auto r = density_from_potential(pw, zero, occ, kg);
    VecR v = r.rho.real_values();
    CHECK(v.maxCoeff() - v.minCoeff() < 1e-14 * v.maxCoeff());
    double s = 0;
    for (int j = -4; j < 4; j++) {
        double k = (j + 1) / 8.0 - 0.0; // centered grid {-3/8..4/8}
        for (int g = -10; g <= 10; g++) {
            s += 1 / (std::exp(((g + k) * (g + k) + 1) / 0.05) + 1);
        }
    }
    s /= 8 * 2 * pi;
    CHECK(v[0] == doctest::Approx(s).epsilon(1e-12));
    CHECK(r.charge == doctest::Approx(s * 2 * pi).epsilon(1e-12));
}

TEST_CASE("Mathieu density is positive, real, and integrates to the k-averaged occupation")
{
    PlaneWaveBasis pw(line(), 200);
    auto phi = mathieu_phi(pw.lattice, pw.fft_grid);
    OccupationModel occ{1 / 40.0, -0.2426};
    KGrid kg(pw.lattice, {16, 1, 1});
    BandStructure bands;
    auto r = density_from_potential(pw, phi, occ, kg, &bands);
    CHECK(r.rho.real_values().minCoeff() > 0.0);
    CHECK(r.rho.realness_defect() < 1e-15);
    double occsum = 0;
    for (auto& f : bands.fibers) {
        for (int n = 0; n < f.eval.size(); n++) {
            occsum += fermi_dirac(f.eval[n] - occ.mu, occ, 0);
        }
    }
    occsum /= bands.fibers.size();
    CHECK(r.rho.integral() == doctest::Approx(occsum).epsilon(1e-12));
    CHECK(r.charge == doctest::Approx(occsum).epsilon(1e-14));
    CHECK_FALSE(r.cutoff_too_low);
}

TEST_CASE("spectral_gap: free particle below the spectrum, Mathieu edges, band-edge flag")
{
    PlaneWaveBasis pw(line(), 200);
    PeriodicField zero(pw.lattice, pw.fft_grid);
    KGrid kg(pw.lattice, {16, 1, 1});
    auto fb = compute_bands(pw, zero, kg);
    auto g = spectral_gap(fb, -1.0);
    CHECK(g.eta == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g.in_gap);

    auto phi = mathieu_phi(pw.lattice, pw.fft_grid);
    auto mb = compute_bands(pw, phi, kg);
    auto mg = spectral_gap(mb, -0.24);
    VecR ref = mathieu_reference(0.5, 60);
    CHECK(std::abs(mg.edge_below - ref[0]) < 1e-6);
    CHECK(std::abs(mg.edge_above - ref[1]) < 1e-6);
    CHECK(mg.in_gap);
    CHECK(mg.eta <= mg.eta0);

    auto edge = spectral_gap(mb, mg.edge_below);
    CHECK(edge.eta == 0.0);
    CHECK_FALSE(edge.in_gap);
}

TEST_CASE("gap monotonicity under k-grid refinement")
{
    PlaneWaveBasis pw(line(), 60);
    auto phi = mathieu_phi(pw.lattice, pw.fft_grid);
    for (double mu : {-0.5, -0.24, 0.1, 1.2}) {
        double coarse = spectral_gap(compute_bands(pw, phi, KGrid(pw.lattice, {6, 1, 1})), mu).eta;
        double fine = spectral_gap(compute_bands(pw, phi, KGrid(pw.lattice, {12, 1, 1})), mu).eta;
        CHECK(fine <= coarse);
    }
}

// ---------------------------------------------------------------------------
// contour quadrature

namespace {

MatC resolvent(const MatC& H, cplx z)
{
    MatC a = z * MatC::Identity(H.rows(), H.cols()) - H;
    return a.partialPivLu().inverse();
}

} // namespace

TEST_CASE("contour: resolvent integral of a diagonal matrix reproduces f_T(H - mu) and f_T'(H - mu)")
{
    OccupationModel occ{0.02, 0.0};
    MatC H = MatC::Zero(5, 5);
    H.diagonal() << -2.0, -0.7, -0.3, 0.4, 1.5;
    auto r1 = contour_quadrature([&](cplx z) { return resolvent(H, z); }, occ, -2.0, 1.5, 0.3);
    auto r2 = contour_quadrature(
        [&](cplx z) {
            MatC r = resolvent(H, z);
            return MatC(r * r);
        },
        occ, -2.0, 1.5, 0.3);
    for (int i = 0; i < 5; i++) {
        double e = H(i, i).real();
        CHECK(std::abs(r1.value(i, i) - fermi_dirac(e, occ, 0)) < 1e-8);
        CHECK(std::abs(r2.value(i, i) - fermi_dirac(e, occ, 1)) < 1e-8);
    }
    CHECK(r1.error < 1e-8);
}

TEST_CASE("contour: scalar H = 0 with mu = 1 gives f_T(-1)")
{
    OccupationModel occ{0.1, 1.0};
    MatC H = MatC::Zero(1, 1);
    auto r = contour_quadrature([&](cplx z) { return resolvent(H, z); }, occ, 0.0, 0.0, 1.0);
    CHECK(std::abs(r.value(0, 0) - 1 / (std::exp(-10.0) + 1)) < 1e-10);
}

TEST_CASE("contour: random gapped fibers, functional-calculus equivalence and divided differences")
{
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    OccupationModel occ{0.05, 0.0};
    for (int trial = 0; trial < 3; trial++) {
        int n = 8;
        MatC a(n, n);
        for (int i = 0; i < n; i++) {
            for (int j = 0; j < n; j++) {
                a(i, j) = cplx(nd(rng), nd(rng));
            }
        }
        MatC H = 0.5 * (a + a.adjoint());
        VecR ev;
        MatC U;
        hermitian_eigensolve(H, ev, U);
        // open a gap of width >= 0.4 around mu = 0 by shifting eigenvalues outward
        for (int i = 0; i < n; i++) {
            ev[i] += ev[i] < 0 ? -0.2 : 0.2;
        }
        H = U * ev.asDiagonal() * U.adjoint();
        double eta = ev.cwiseAbs().minCoeff();
        auto r = contour_quadrature([&](cplx z) { return resolvent(H, z); }, occ, ev.minCoeff(), ev.maxCoeff(), eta);
        VecR fv(n);
        for (int i = 0; i < n; i++) {
            fv[i] = fermi_dirac(ev[i], occ, 0);
        }
        MatC fH = U * fv.asDiagonal() * U.adjoint();
        CHECK((r.value - fH).cwiseAbs().maxCoeff() < 1e-8);

        // <m| oint f r A r |n> = f[e_m, e_n] A_mn in the eigenbasis
        MatC A(n, n);
        for (int i = 0; i < n; i++) {
            for (int j = 0; j < n; j++) {
                A(i, j) = cplx(nd(rng), nd(rng));
            }
        }
        auto rar = contour_quadrature(
            [&](cplx z) {
                MatC rz = resolvent(H, z);
                return MatC(rz * A * rz);
            },
            occ, ev.minCoeff(), ev.maxCoeff(), eta);
        MatC inEig = U.adjoint() * rar.value * U;
        MatC Ae = U.adjoint() * A * U;
        double err = 0;
        for (int i = 0; i < n; i++) {
            for (int j = 0; j < n; j++) {
                err = std::max(err, std::abs(inEig(i, j) - divided_difference(occ, {ev[i], ev[j]}) * Ae(i, j)));
            }
        }
        CHECK(err < 1e-8);
    }
}
