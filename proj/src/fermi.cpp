// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file fermi.cpp
 *  \brief Fermi-Dirac calculus.
 *
 *  With g = f(x), h = f(-x) and x = beta*lambda, d/dx g^a h^b = -a g^a h^{b+1} + b g^{a+1} h^b,
 *  so every derivative is a polynomial in (g, h) with bounded terms.
 */

#include "debye/fermi.hpp"
#include "debye/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace debye {

namespace {

struct Term
{
    int a, b;
    double c;
};

using Poly = std::vector<Term>;

const std::array<Poly, max_fermi_order + 1>& derivative_table()
{
    static const auto table = [] {
        std::array<Poly, max_fermi_order + 1> t;
        t[0] = {{1, 0, 1.0}};
        for (int n = 1; n <= max_fermi_order; n++) {
            std::map<std::pair<int, int>, double> acc;
            for (auto& p : t[n - 1]) {
                if (p.a > 0) {
                    acc[{p.a, p.b + 1}] -= p.a * p.c;
                }
                if (p.b > 0) {
                    acc[{p.a + 1, p.b}] += p.b * p.c;
                }
            }
            for (auto& [k, v] : acc) {
                if (v != 0) {
                    t[n].push_back({k.first, k.second, v});
                }
            }
        }
        return t;
    }();
    return table;
}

double logistic(double x)
{
    if (x >= 0) {
        double e = std::exp(-x);
        return e / (1 + e);
    }
    return 1 / (1 + std::exp(x));
}

double log_cosh(double y)
{
    y = std::abs(y);
    return y + std::log1p(std::exp(-2 * y)) - std::log(2.0);
}

double log_sinh(double y)
{
    // y > 0
    return y + std::log(-std::expm1(-2 * y)) - std::log(2.0);
}

double first_difference(const OccupationModel& occ, double a, double b)
{
    if (occ.zero_temperature) {
        double fa = a < occ.mu ? 1.0 : 0.0;
        double fb = b < occ.mu ? 1.0 : 0.0;
        return (fa - fb) / (a - b);
    }
    // f(a) - f(b) = -sinh(A - B) / (2 cosh A cosh B), A = beta (a - mu) / 2
    double beta = occ.beta();
    double A = 0.5 * beta * (a - occ.mu);
    double B = 0.5 * beta * (b - occ.mu);
    double diff = std::abs(A - B);
    double l = log_sinh(diff) - std::log(2 * std::abs(a - b)) - log_cosh(A) - log_cosh(B);
    return -std::exp(l);
}

double taylor_cluster(const OccupationModel& occ, const double* x, int count)
{
    const int n = count - 1;
    double c = 0;
    for (int i = 0; i < count; i++) {
        c += x[i];
    }
    c /= count;
    // complete homogeneous symmetric polynomials h_j of the offsets
    constexpr int J = 4;
    std::array<double, J + 1> h{};
    h[0] = 1;
    for (int i = 0; i < count; i++) {
        double e = x[i] - c;
        for (int j = 1; j <= J; j++) {
            h[j] += e * h[j - 1];
        }
    }
    double s = 0;
    double fact = 1;
    for (int k = 2; k <= n; k++) {
        fact *= k;
    }
    for (int j = 0; j <= J && n + j <= max_fermi_order; j++) {
        if (j > 0) {
            fact *= (n + j);
        }
        s += fermi_dirac(c - occ.mu, occ, n + j) / fact * h[j];
    }
    return s;
}

double dd_sorted(const OccupationModel& occ, const double* x, int count)
{
    if (count == 1) {
        return fermi_dirac(x[0] - occ.mu, occ, 0);
    }
    double spread = x[count - 1] - x[0];
    if (spread < coalescence_tol(occ)) {
        return taylor_cluster(occ, x, count);
    }
    if (count == 2) {
        return first_difference(occ, x[0], x[1]);
    }
    return (dd_sorted(occ, x + 1, count - 1) - dd_sorted(occ, x, count - 1)) / spread;
}

} // namespace

double fermi_dirac(double lambda, const OccupationModel& occ, int order)
{
    if (order < 0 || order > max_fermi_order) {
        throw ConfigError("fermi_dirac: unsupported derivative order");
    }
    if (occ.zero_temperature) {
        if (lambda == 0) {
            throw DielectricityError("step occupation evaluated at the chemical potential");
        }
        return order == 0 ? (lambda < 0 ? 1.0 : 0.0) : 0.0;
    }
    double beta = occ.beta();
    double x = beta * lambda;
    double g = logistic(x);
    double h = logistic(-x);
    double s = 0;
    for (auto& t : derivative_table()[order]) {
        s += t.c * std::pow(g, t.a) * std::pow(h, t.b);
    }
    return s * std::pow(beta, order);
}

cplx fermi_dirac(cplx z, double T)
{
    cplx w = z / T;
    if (w.real() >= 0) {
        cplx e = std::exp(-w);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(w));
}

double divided_difference(const OccupationModel& occ, std::span<const double> nodes)
{
    int count = static_cast<int>(nodes.size());
    if (count < 1 || count > 7) {
        throw ConfigError("divided_difference: between 1 and 7 nodes supported");
    }
    std::array<double, 7> x{};
    for (int i = 0; i < count; i++) {
        if (!std::isfinite(nodes[i])) {
            throw ConfigError("divided_difference: nodes must be finite");
        }
        x[i] = nodes[i];
    }
    std::sort(x.begin(), x.begin() + count);
    return dd_sorted(occ, x.data(), count);
}

} // namespace debye
