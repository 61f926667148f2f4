// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file contour.cpp
 *  \brief Polygonal Cauchy contour with tanh-sinh edges.
 */

#include "debye/contour.hpp"
#include "debye/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace debye {

namespace {

constexpr double t_max = 3.5;

std::vector<cplx> vertices(const ContourSpec& s)
{
    double h = s.eta;
    double ec = std::min(pi * s.T / 2, s.eta / 2);
    double R = s.mu + std::max(s.eta + s.T, 37.0 * s.T);
    double L = std::min(s.emin, s.mu - s.eta) - 5;
    double m = s.mu;
    double e = s.eta;
    using c = cplx;
    return {c(R, h), c(m + e, h), c(m, ec), c(m - e, h), c(L, h), c(L, -h), c(m - e, -h), c(m, -ec), c(m + e, -h),
            c(R, -h)};
}

void check_poles(const ContourSpec& s, const std::vector<ContourNode>& nodes)
{
    // nearest Matsubara poles mu +- i pi T
    for (int sign : {1, -1}) {
        cplx pole(s.mu, sign * pi * s.T);
        for (size_t j = 0; j + 1 < nodes.size(); j++) {
            double spacing = std::abs(nodes[j + 1].z - nodes[j].z);
            if (std::abs(nodes[j].z - pole) < 0.5 * spacing) {
                std::ostringstream os;
                os << "contour node within half a node spacing of the pole at mu " << (sign > 0 ? "+" : "-")
                   << " i pi T";
                throw ContourGeometryError(os.str());
            }
        }
    }
}

} // namespace

ContourSpec make_contour_spec(const OccupationModel& occ, double emin, double eta, double tol)
{
    if (!(eta > 0)) {
        throw ContourGeometryError("contour requires mu at positive distance from the spectrum");
    }
    ContourSpec s;
    s.mu = occ.mu;
    s.T = occ.T;
    s.eta = eta;
    s.emin = emin;
    s.tol = tol;
    return s;
}

std::vector<ContourNode> contour_nodes(const ContourSpec& s, int level)
{
    auto v = vertices(s);
    double step = std::ldexp(1.0, -level);
    int half = static_cast<int>(std::ceil(t_max / step));
    std::vector<ContourNode> out;
    const cplx two_pi_i(0, 2 * pi);
    for (size_t e = 0; e + 1 < v.size(); e++) {
        cplx a = v[e], b = v[e + 1];
        cplx mid = 0.5 * (a + b), rad = 0.5 * (b - a);
        for (int j = -half; j <= half; j++) {
            double t = j * step;
            double sh = std::sinh(t);
            double u = std::tanh(0.5 * pi * sh);
            double ch = std::cosh(0.5 * pi * sh);
            double du = 0.5 * pi * std::cosh(t) / (ch * ch);
            if (du < 1e-300) {
                continue;
            }
            cplx z = mid + rad * u;
            cplx w = fermi_dirac(z - s.mu, s.T) * rad * du * step / two_pi_i;
            out.push_back({z, w});
        }
    }
    return out;
}

ContourResult contour_integrate(const ContourSpec& spec, int n, const std::function<void(cplx, cplx*)>& g)
{
    ContourResult r;
    VecC prev;
    VecC buf(n);
    for (int level = 0; level <= spec.max_level; level++) {
        auto nodes = contour_nodes(spec, level);
        VecC acc = VecC::Zero(n);
        for (auto& nd : nodes) {
            g(nd.z, buf.data());
            acc += nd.w * buf;
        }
        r.value = acc;
        r.level = level;
        r.nodes = static_cast<int>(nodes.size());
        if (level >= 2) {
            r.error = (acc - prev).cwiseAbs().maxCoeff();
            double scale = std::max(1.0, acc.cwiseAbs().maxCoeff());
            if (r.error < spec.tol * scale) {
                check_poles(spec, nodes);
                return r;
            }
        }
        prev = acc;
    }
    check_poles(spec, contour_nodes(spec, spec.max_level));
    return r;
}

ContourMatrixResult contour_quadrature(const std::function<MatC(cplx)>& integrand, const OccupationModel& occ,
                                       double emin, double emax, double eta, double tol)
{
    (void)emax;
    ContourSpec s = make_contour_spec(occ, emin, eta, tol);
    MatC probe = integrand(cplx(s.mu, 1.0));
    const long rows = probe.rows(), cols = probe.cols();
    auto res = contour_integrate(s, static_cast<int>(rows * cols), [&](cplx z, cplx* out) {
        MatC m = integrand(z);
        std::copy(m.data(), m.data() + rows * cols, out);
    });
    ContourMatrixResult out;
    out.value = Eigen::Map<MatC>(res.value.data(), rows, cols);
    out.error = res.error;
    return out;
}

} // namespace debye
