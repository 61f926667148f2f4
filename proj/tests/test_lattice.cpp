// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file test_lattice.cpp
 *  \brief lattice-core: lattices, G-sets, transforms, Bloch fibers, projections, rescaling.
 */

#include "doctest.h"
#include "test_util.hpp"

#include "debye/errors.hpp"
#include "debye/lattice.hpp"

#include <cmath>
#include <set>

using namespace debye;
using debye::test::line;
using debye::test::random_field;

TEST_CASE("reciprocal lattice of the 2 pi line is the unit line")
{
    MatR r = reciprocal_lattice(line().basis);
    CHECK(r(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("reciprocal lattice of a cubic lattice is diagonal 2 pi / a")
{
    MatR b = 1.7 * MatR::Identity(3, 3);
    MatR r = reciprocal_lattice(b);
    for (int i = 0; i < 3; i++) {
        for (int j = 0; j < 3; j++) {
            CHECK(r(i, j) == doctest::Approx(i == j ? 2 * pi / 1.7 : 0.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("reciprocal lattice of the hexagonal 2D basis matches the rotation oracle")
{
    MatR b(2, 2);
    b << 1, 0.5, 0, std::sqrt(3.0) / 2;
    MatR r = reciprocal_lattice(b);
    // oracle: w*_1 is perpendicular to w_2, w*_2 to w_1, scaled so w_i . w*_i = 2 pi
    auto perp = [](Eigen::Vector2d v) { return Eigen::Vector2d(v[1], -v[0]); };
    Eigen::Vector2d a1 = b.col(0), a2 = b.col(1);
    Eigen::Vector2d b1 = perp(a2) * (2 * pi / a1.dot(perp(a2)));
    Eigen::Vector2d b2 = perp(a1) * (2 * pi / a2.dot(perp(a1)));
    CHECK((r.col(0) - b1).norm() < 1e-13);
    CHECK((r.col(1) - b2).norm() < 1e-13);
}

TEST_CASE("reciprocity holds for random bases in d = 1, 2, 3")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2, 2);
    int checked = 0;
    for (int trial = 0; trial < 100; trial++) {
        int d = 1 + trial % 3;
        MatR b(d, d);
        for (int i = 0; i < d; i++) {
            for (int j = 0; j < d; j++) {
                b(i, j) = u(rng);
            }
        }
        if (std::abs(b.determinant()) < 1e-3) {
            continue;
        }
        Lattice lat(b);
        MatR prod = lat.basis.transpose() * lat.reciprocal;
        double err = (prod - 2 * pi * MatR::Identity(d, d)).cwiseAbs().maxCoeff();
        CHECK(err < 1e-12 * 2 * pi * b.norm() * lat.reciprocal.norm());
        CHECK(lat.volume == doctest::Approx(std::abs(b.determinant())).epsilon(1e-14));
        checked++;
    }
    CHECK(checked > 90);
}

TEST_CASE("singular basis raises a degenerate-lattice error")
{
    MatR b(2, 2);
    b << 1, 2, 2, 4;
    CHECK_THROWS_AS(Lattice{b}, DegenerateLatticeError);
}

TEST_CASE("plane-wave basis: G = 0 first, negation closed, alias-free grid")
{
    PlaneWaveBasis pw(line(), 200);
    CHECK(pw.size() == 41); // |G| <= 20
    CHECK(pw.miller[0] == Index3{0, 0, 0});
    CHECK(pw.dens_size() == 81);
    CHECK(pw.fft_grid[0] >= 2 * 20 + 1);
    CHECK(pw.fft_grid[0] >= 4 * 20 + 1);

    MatR b(2, 2);
    b << 1, 0.5, 0, std::sqrt(3.0) / 2;
    // hexagonal shells have six-fold ties on the boundary
    Lattice hex(b);
    double g1 = hex.reciprocal.col(0).squaredNorm();
    PlaneWaveBasis pw2(hex, 0.5 * g1);
    std::set<Index3> s(pw2.miller.begin(), pw2.miller.end());
    CHECK(pw2.size() == 7);
    for (auto& m : pw2.miller) {
        CHECK(s.count({-m[0], -m[1], -m[2]}) == 1);
    }
    for (int i = 0; i < 2; i++) {
        int gmax = 0;
        for (auto& m : pw2.miller) {
            gmax = std::max(gmax, std::abs(m[i]));
        }
        CHECK(pw2.fft_grid[i] >= 2 * gmax + 1);
    }
}

TEST_CASE("transform: cos(x) has coefficient 1/2 at G = +-1")
{
    Lattice lat = line();
    Index3 g{16, 1, 1};
    VecR v(16);
    for (int j = 0; j < 16; j++) {
        v[j] = std::cos(2 * pi * j / 16);
    }
    auto f = PeriodicField::from_real_values(lat, g, v);
    CHECK(std::abs(f.coeff({1, 0, 0}) - 0.5) < 1e-15);
    CHECK(std::abs(f.coeff({-1, 0, 0}) - 0.5) < 1e-15);
    double rest = 0;
    for (size_t i = 0; i < f.size(); i++) {
        Index3 m = fft_freq(g, i);
        if (std::abs(m[0]) != 1) {
            rest = std::max(rest, std::abs(f.coeffs[i]));
        }
    }
    CHECK(rest < 1e-15);
}

TEST_CASE("transform: a constant field has only the G = 0 coefficient")
{
    Lattice lat = line();
    VecR v = VecR::Constant(12, 3.25);
    auto f = PeriodicField::from_real_values(lat, {12, 1, 1}, v);
    CHECK(std::abs(f.coeffs[0] - 3.25) < 1e-15);
    CHECK(f.coeffs.tail(11).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("transform round trip and Parseval on random real fields")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    MatR b(3, 3);
    b << 1, 0.2, 0, 0, 1.1, 0.3, 0.1, 0, 0.9;
    Lattice lat(b);
    Index3 g{6, 8, 5};
    VecR v(grid_size(g));
    for (auto& x : v) {
        x = nd(rng);
    }
    auto f = PeriodicField::from_real_values(lat, g, v);
    VecR back = f.real_values();
    CHECK((back - v).norm() <= 1e-12 * v.norm());
    double mean_sq = v.squaredNorm() / v.size();
    CHECK(f.coeffs.squaredNorm() == doctest::Approx(mean_sq).epsilon(1e-12));
    CHECK(f.realness_defect() < 1e-15);
}

namespace {

SupercellField gaussian_supercell(const Lattice& micro, int N, const Index3& g)
{
    SupercellField f(micro, {N, 1, 1}, g);
    VecR v(g[0]);
    double L = micro.basis(0, 0) * N;
    for (int j = 0; j < g[0]; j++) {
        double x = L * j / g[0];
        double s = 0;
        for (int img = -2; img <= 2; img++) {
            double y = x - 0.5 * L + img * L;
            s += std::exp(-y * y / (2 * 4.0));
        }
        v[j] = s;
    }
    f.field = PeriodicField::from_real_values(f.field.lattice, g, v);
    return f;
}

} // namespace

TEST_CASE("bloch: a micro-periodic field has f_0 = f and f_k = 0 otherwise")
{
    Lattice micro = line();
    std::mt19937_64 rng(5);
    auto p = random_field(micro, {16, 1, 1}, 5, rng);
    // tile onto a 4-cell supercell: coefficient at q = 4 G
    SupercellField f(micro, {4, 1, 1}, {64, 1, 1});
    for (size_t i = 0; i < p.size(); i++) {
        Index3 m = fft_freq(p.grid, i);
        f.field.set_coeff({4 * m[0], 0, 0}, p.coeffs[i]);
    }
    auto comps = bloch_decompose(f, {16, 1, 1});
    REQUIRE(comps.size() == 4);
    for (auto& c : comps) {
        if (c.kindex == Index3{0, 0, 0}) {
            CHECK((c.fk.coeffs - p.coeffs).cwiseAbs().maxCoeff() < 1e-15);
        } else {
            CHECK(c.fk.coeffs.cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("bloch: a single plane wave e^{iqx} lands on the fiber k = q")
{
    Lattice micro = line();
    SupercellField f(micro, {8, 1, 1}, {64, 1, 1}, false);
    f.field.set_coeff({3, 0, 0}, 1.0); // q = 3/8
    auto comps = bloch_decompose(f);
    for (auto& c : comps) {
        double mx = c.fk.coeffs.cwiseAbs().maxCoeff();
        if (c.kindex[0] == 3) {
            CHECK(std::abs(c.fk.coeff({0, 0, 0}) - 1.0) < 1e-15);
        } else {
            CHECK(mx == 0.0);
        }
    }
}

TEST_CASE("bloch: fibers match the lattice-sum definition on grid points")
{
    Lattice micro = line();
    const int N = 4, nm = 12;
    std::mt19937_64 rng(8);
    SupercellField f(micro, {N, 1, 1}, {N * nm, 1, 1});
    f.field = random_field(f.field.lattice, {N * nm, 1, 1}, 4.5, rng);
    VecC vals = f.field.values();
    auto comps = bloch_decompose(f, {nm, 1, 1});
    double err = 0;
    for (auto& c : comps) {
        VecC fk = c.fk.values();
        for (int j = 0; j < nm; j++) {
            cplx s = 0;
            for (int t = 0; t < N; t++) {
                double x = 2 * pi * (j + nm * t) / nm;
                s += std::exp(cplx(0, -c.k[0] * x)) * vals[j + nm * t];
            }
            s /= double(N);
            err = std::max(err, std::abs(s - fk[j]));
        }
    }
    CHECK(err < 1e-12);
}

TEST_CASE("bloch round trip of a Gaussian bump on a 16-cell supercell")
{
    Lattice micro = line();
    auto f = gaussian_supercell(micro, 16, {512, 1, 1});
    auto comps = bloch_decompose(f);
    auto back = bloch_reconstruct(comps, micro, {16, 1, 1}, {512, 1, 1});
    CHECK((back.field.coeffs - f.field.coeffs).cwiseAbs().maxCoeff() < 1e-10);
    double scale = f.field.values().cwiseAbs().maxCoeff();
    CHECK((back.field.values() - f.field.values()).cwiseAbs().maxCoeff() < 1e-10 * scale);
}

TEST_CASE("bloch: int_Omega f_k equals the per-cell transform for all grid k")
{
    Lattice micro = line();
    std::mt19937_64 rng(21);
    const int N = 8;
    SupercellField f(micro, {N, 1, 1}, {128, 1, 1});
    f.field = random_field(f.field.lattice, {128, 1, 1}, 6, rng);
    VecC vals = f.field.values();
    auto comps = bloch_decompose(f);
    double err = 0;
    for (auto& c : comps) {
        // oracle: Riemann sum of N^{-1} int e^{-ikx} f over the supercell (exact for band-limited f)
        cplx s = 0;
        double L = 2 * pi * N;
        for (int j = 0; j < 128; j++) {
            double x = L * j / 128;
            s += std::exp(cplx(0, -c.k[0] * x)) * vals[j];
        }
        s *= L / 128 / N;
        err = std::max(err, std::abs(micro.volume * c.fk.coeffs[0] - s));
        CHECK(std::abs(fourier_at(f, {c.kindex[0], 0, 0}) - s) < 1e-10);
    }
    CHECK(err < 1e-10);
}

TEST_CASE("low-momentum projection: r = 0 keeps the mean, large r is the identity")
{
    Lattice micro = line();
    std::mt19937_64 rng(2);
    SupercellField f(micro, {8, 1, 1}, {64, 1, 1});
    f.field = random_field(f.field.lattice, {64, 1, 1}, 10, rng);
    auto p0 = low_momentum_project(f.field, 0.0);
    CHECK(std::abs(p0.coeffs[0] - f.field.coeffs[0]) == 0.0);
    CHECK(p0.coeffs.tail(63).cwiseAbs().maxCoeff() == 0.0);
    auto pall = low_momentum_project(f.field, 100.0);
    CHECK((pall.coeffs - f.field.coeffs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("low-momentum projection is idempotent and self-adjoint")
{
    Lattice micro = line();
    std::mt19937_64 rng(4);
    SupercellField f(micro, {8, 1, 1}, {64, 1, 1}), g(micro, {8, 1, 1}, {64, 1, 1});
    f.field = random_field(f.field.lattice, {64, 1, 1}, 10, rng);
    g.field = random_field(g.field.lattice, {64, 1, 1}, 10, rng);
    double r = 0.3;
    auto pf = low_momentum_project(f, r);
    auto ppf = low_momentum_project(pf, r);
    CHECK((ppf.field.coeffs - pf.field.coeffs).cwiseAbs().maxCoeff() < 1e-15);
    auto pg = low_momentum_project(g, r);
    cplx a = inner(pf.field, g.field), b = inner(f.field, pg.field);
    CHECK(std::abs(a - b) < 1e-12 * std::abs(a) + 1e-14);
    auto comp = f.field - pf.field;
    CHECK(std::abs(inner(comp, pf.field)) < 1e-12);
}

TEST_CASE("projected fibers are constants |Omega|^{-1} fhat(k) inside the ball")
{
    Lattice micro = line();
    std::mt19937_64 rng(9);
    const int N = 16;
    SupercellField f(micro, {N, 1, 1}, {256, 1, 1});
    f.field = random_field(f.field.lattice, {256, 1, 1}, 8, rng);
    double r = 0.3;
    auto pf = low_momentum_project(f, r);
    auto comps = bloch_decompose(pf);
    for (auto& c : comps) {
        cplx expect = std::abs(c.k[0]) <= r ? fourier_at(f, {c.kindex[0], 0, 0}) / micro.volume : cplx(0);
        CHECK(std::abs(c.fk.coeffs[0] - expect) < 1e-13);
        CHECK(c.fk.coeffs.tail(c.fk.size() - 1).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("rescale: delta = 1 is the identity and U_delta is unitary")
{
    std::mt19937_64 rng(6);
    Lattice sc = line(2 * pi * 8);
    auto f = random_field(sc, {64, 1, 1}, 2, rng);
    auto id = rescale_field(f, 1.0, RescaleDirection::micro_to_macro);
    CHECK((id.coeffs - f.coeffs).cwiseAbs().maxCoeff() == 0.0);
    auto m = rescale_field(f, 0.125, RescaleDirection::micro_to_macro);
    CHECK(m.l2_norm() == doctest::Approx(f.l2_norm()).epsilon(1e-12));
    auto back = rescale_field(m, 0.125, RescaleDirection::macro_to_micro);
    CHECK((back.coeffs - f.coeffs).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(rescale_field(f, 0.3, RescaleDirection::micro_to_macro), ConfigError);
}

TEST_CASE("rescale: density scaling gives delta^{-d} kappa(x / delta) pointwise")
{
    const int N = 4;
    Lattice sc = line(2 * pi * N);
    Index3 g{64, 1, 1};
    VecR v(64);
    for (int j = 0; j < 64; j++) {
        double y = 2 * pi * N * j / 64.0;
        v[j] = 1 + 0.3 * std::cos(y);
    }
    auto kappa = PeriodicField::from_real_values(sc, g, v);
    double delta = 1.0 / N;
    auto macro = rescale_field(kappa, delta, RescaleDirection::micro_to_macro, Scaling::density);
    CHECK(macro.lattice.basis(0, 0) == doctest::Approx(2 * pi));
    VecR mv = macro.real_values();
    for (int j = 0; j < 64; j++) {
        double x = macro.point(j)[0];
        double expect = std::pow(delta, -1.0) * (1 + 0.3 * std::cos(x / delta));
        CHECK(std::abs(mv[j] - expect) < 1e-12);
    }
    CHECK(macro.integral() == doctest::Approx(kappa.integral()).epsilon(1e-13));
}

TEST_CASE("inverse Laplacian: cos(x) maps to cos(x), 0 to 0, nonzero mean refused")
{
    Lattice lat = line();
    PeriodicField f(lat, {16, 1, 1});
    f.set_coeff({1, 0, 0}, 0.5);
    f.set_coeff({-1, 0, 0}, 0.5);
    auto phi = apply_inverse_laplacian(f);
    CHECK((phi.coeffs - f.coeffs).cwiseAbs().maxCoeff() < 1e-16);
    PeriodicField z(lat, {16, 1, 1});
    CHECK(apply_inverse_laplacian(z).coeffs.cwiseAbs().maxCoeff() == 0.0);
    PeriodicField c = f;
    c.coeffs[0] = 1e-3;
    CHECK_THROWS_AS(apply_inverse_laplacian(c), SolvabilityError);
}

TEST_CASE("inverse Laplacian composed with -Laplace is the identity on mean-zero fields")
{
    std::mt19937_64 rng(12);
    MatR b(2, 2);
    b << 1.3, 0.4, 0, 0.8;
    Lattice lat(b);
    auto f = random_field(lat, {12, 10, 1}, 15, rng, true);
    auto back = apply_neg_laplacian(apply_inverse_laplacian(f));
    CHECK((back.coeffs - f.coeffs).norm() <= 1e-12 * f.coeffs.norm());
}
