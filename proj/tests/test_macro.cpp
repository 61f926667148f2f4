// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file test_macro.cpp
 *  \brief macro-pb: Fourier Poisson-Boltzmann solve and Debye observables.
 */

#include "doctest.h"
#include "test_util.hpp"

#include "debye/errors.hpp"
#include "debye/log.hpp"
#include "debye/macro.hpp"

#include <cmath>

using namespace debye;
using debye::test::line;

namespace {

MacroProblem problem_1d(double L, int n, double nu, double eps, double width, double x0)
{
    MacroProblem p;
    p.box = line(L);
    p.nu = nu;
    p.eps = MatR::Constant(1, 1, eps);
    p.source = gaussian_source(p.box, {n, 1, 1}, {{VecR::Constant(1, x0), width, 1.0}});
    return p;
}

/// Gaussian of width w convolved with exp(-|x|)/2.
double screened_gaussian(double x, double w)
{
    double s2 = std::sqrt(2.0) * w;
    return 0.25 * std::exp(0.5 * w * w) *
           (std::exp(-x) * std::erfc((w * w - x) / s2) + std::exp(x) * std::erfc((w * w + x) / s2));
}

} // namespace

TEST_CASE("solve_pb: constant source gives c / nu")
{
    MacroProblem p;
    p.box = line(10);
    p.nu = 2.5;
    p.eps = MatR::Constant(1, 1, 1.7);
    p.source = PeriodicField(p.box, {32, 1, 1});
    p.source.coeffs[0] = 0.8;
    PeriodicField psi = solve_pb(p);
    VecR v = psi.real_values();
    CHECK(v.minCoeff() == doctest::Approx(0.8 / 2.5).epsilon(1e-15));
    CHECK(v.maxCoeff() == doctest::Approx(0.8 / 2.5).epsilon(1e-15));
}

TEST_CASE("solve_pb: 1D narrow bump matches the screened Green's function")
{
    const double w = 0.02, x0 = 20;
    MacroProblem p = problem_1d(40, 8192, 1.0, 1.0, w, x0);
    PeriodicField psi = solve_pb(p);
    double worst_plain = 0, worst_exact = 0;
    for (double x : {0.2, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        for (double s : {-1.0, 1.0}) {
            double v = evaluate_at(psi, VecR::Constant(1, x0 + s * x));
            worst_plain = std::max(worst_plain, std::abs(v / (0.5 * std::exp(-x)) - 1));
            worst_exact = std::max(worst_exact, std::abs(v / screened_gaussian(x, w) - 1));
        }
    }
    CHECK(worst_plain < 1e-3);
    CHECK(worst_exact < 1e-8);
}

TEST_CASE("solve_pb: residual, linearity, positivity and energy identity")
{
    MacroProblem p1 = problem_1d(30, 2048, 1.3, 0.7, 0.1, 7.0);
    MacroProblem p2 = problem_1d(30, 2048, 1.3, 0.7, 0.3, 19.0);
    PeriodicField a = solve_pb(p1), b = solve_pb(p2);
    CHECK(pb_residual(p1, a) <= 1e-10);
    CHECK(energy_identity_defect(p1, a) <= 1e-10);
    MacroProblem mix = p1;
    mix.source = 2.0 * p1.source + (-0.5) * p2.source;
    PeriodicField c = solve_pb(mix);
    CHECK((c - (2.0 * a + (-0.5) * b)).l2_norm() <= 1e-12 * c.l2_norm());
    VecR v = a.real_values();
    CHECK(v.minCoeff() >= -1e-12 * v.cwiseAbs().maxCoeff());
}

TEST_CASE("solve_pb: anisotropic eps = diag(1, 4) elongates the response by 2 along axis 2")
{
    MacroProblem p;
    p.box = Lattice(MatR::Identity(2, 2) * 48.0);
    p.nu = 1;
    p.eps = MatR::Zero(2, 2);
    p.eps(0, 0) = 1;
    p.eps(1, 1) = 4;
    const double w = 0.45;
    VecR c = VecR::Constant(2, 24.0);
    p.source = gaussian_source(p.box, {256, 256, 1}, {{c, w, 1.0}});
    PeriodicField psi = solve_pb(p);
    CHECK(pb_residual(p, psi) <= 1e-10);
    CHECK(energy_identity_defect(p, psi) <= 1e-10);
    MatR mom = second_moments(psi, c);
    // infinite-space moments: 2 eps / nu + w^2
    CHECK(mom(0, 0) == doctest::Approx(2 + w * w).epsilon(1e-3));
    CHECK(mom(1, 1) == doctest::Approx(8 + w * w).epsilon(1e-3));
    CHECK(std::abs(mom(0, 1)) < 1e-8);
    double elong = std::sqrt((mom(1, 1) - w * w) / (mom(0, 0) - w * w));
    CHECK(elong == doctest::Approx(2.0).epsilon(1e-3));
    DecayFit fit = debye_observables(p, psi, c);
    for (size_t a = 0; a < fit.rate.size(); a++) {
        CHECK(fit.rel_error[a] < 0.05);
    }
}

TEST_CASE("debye_observables: 1D rates 1 for nu = 1 and 2 for nu = 4")
{
    for (double nu : {1.0, 4.0}) {
        double ell = 1 / std::sqrt(nu);
        double L = 12 * ell;
        MacroProblem p = problem_1d(L, 4096, nu, 1.0, 0.02, L / 2);
        PeriodicField psi = solve_pb(p);
        DecayFit fit = debye_observables(p, psi, VecR::Constant(1, L / 2));
        CHECK(fit.reliable);
        CHECK(fit.rate[0] == doctest::Approx(std::sqrt(nu)).epsilon(0.05));
        CHECK(fit.expected[0] == doctest::Approx(std::sqrt(nu)).epsilon(1e-14));
    }
}

TEST_CASE("debye_observables: box below 10 Debye lengths is flagged unreliable")
{
    MacroProblem p = problem_1d(6, 1024, 1.0, 1.0, 0.05, 3.0);
    PeriodicField psi = solve_pb(p);
    set_quiet(true);
    DecayFit fit = debye_observables(p, psi, VecR::Constant(1, 3.0));
    set_quiet(false);
    CHECK_FALSE(fit.reliable);
    CHECK(fit.box_debye_lengths == doctest::Approx(6.0));
}

TEST_CASE("auto_box: every side spans 12 of the longest Debye lengths")
{
    MatR eps = MatR::Identity(2, 2);
    eps(1, 1) = 9;
    Lattice box = auto_box(2, 4.0, eps);
    CHECK(box.basis(0, 0) == doctest::Approx(12 * 1.5));
    CHECK(box.basis(1, 1) == doctest::Approx(12 * 1.5));
}

TEST_CASE("MacroProblem: invalid nu and eps are config errors listing every violation")
{
    MacroProblem p = problem_1d(10, 64, 1.0, 1.0, 0.5, 5.0);
    p.nu = -1;
    p.eps(0, 0) = -2;
    try {
        p.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("nu") != std::string::npos);
        CHECK(msg.find("positive definite") != std::string::npos);
    }
    MacroProblem q;
    q.box = Lattice(MatR::Identity(2, 2));
    q.eps = MatR::Identity(2, 2);
    q.eps(0, 1) = 0.5;
    q.source = PeriodicField(q.box, {8, 8, 1});
    CHECK_THROWS_AS(solve_pb(q), ConfigError);
}
