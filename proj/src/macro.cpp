// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

#include "debye/macro.hpp"

#include "debye/errors.hpp"
#include "debye/fft.hpp"
#include "debye/log.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace debye {

void MacroProblem::validate() const
{
    const int d = box.d;
    std::ostringstream os;
    if (!(nu > 0)) {
        os << "macro: nu must be positive (got " << nu << "); ";
    }
    if (eps.rows() != d || eps.cols() != d) {
        os << "macro: eps must be " << d << "x" << d << "; ";
    } else {
        if ((eps - eps.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, eps.cwiseAbs().maxCoeff())) {
            os << "macro: eps must be symmetric; ";
        }
        Eigen::SelfAdjointEigenSolver<MatR> es(0.5 * (eps + eps.transpose()));
        if (!(es.eigenvalues().minCoeff() > 0)) {
            os << "macro: eps must be positive definite; ";
        }
    }
    if (source.lattice.d != d || (source.lattice.basis - box.basis).cwiseAbs().maxCoeff() > 1e-12) {
        os << "macro: source is not defined on the macro box; ";
    }
    std::string msg = os.str();
    if (!msg.empty()) {
        throw ConfigError(msg.substr(0, msg.size() - 2));
    }
}

namespace {

double symbol(const MacroProblem& p, const VecR& xi)
{
    return p.nu + xi.dot(p.eps * xi);
}

} // namespace

PeriodicField solve_pb(const MacroProblem& p)
{
    p.validate();
    PeriodicField psi = p.source;
    for (size_t i = 0; i < psi.size(); i++) {
        psi.coeffs[i] /= symbol(p, psi.wavevector(i));
    }
    return psi;
}

double pb_residual(const MacroProblem& p, const PeriodicField& psi)
{
    VecC r(psi.size());
    for (size_t i = 0; i < psi.size(); i++) {
        r[i] = symbol(p, psi.wavevector(i)) * psi.coeffs[i] - p.source.coeffs[i];
    }
    return r.norm() / p.source.coeffs.norm();
}

double energy_identity_defect(const MacroProblem& p, const PeriodicField& psi)
{
    const int d = p.box.d;
    const double w = p.box.volume / static_cast<double>(psi.size());
    VecR pv = psi.real_values();
    VecR kv = p.source.real_values();
    std::vector<VecR> grad(d);
    for (int j = 0; j < d; j++) {
        PeriodicField g = psi;
        for (size_t i = 0; i < g.size(); i++) {
            g.coeffs[i] *= cplx(0, g.wavevector(i)[j]);
        }
        grad[j] = g.real_values();
    }
    double lhs = w * pv.dot(kv);
    double mass = p.nu * w * pv.squaredNorm();
    double stiff = 0;
    for (int i = 0; i < d; i++) {
        for (int j = 0; j < d; j++) {
            stiff += p.eps(i, j) * w * grad[i].dot(grad[j]);
        }
    }
    return std::abs(lhs - mass - stiff) / std::abs(lhs);
}

PeriodicField gaussian_source(const Lattice& box, const Index3& grid, const std::vector<GaussianBump>& bumps)
{
    PeriodicField f(box, grid, true);
    double tail = 0;
    for (size_t i = 0; i < f.size(); i++) {
        VecR g = f.wavevector(i);
        cplx s = 0;
        for (const auto& b : bumps) {
            if (!(b.width > 0)) {
                throw ConfigError("gaussian source: width must be positive");
            }
            if (b.center.size() != box.d) {
                throw ConfigError("gaussian source: center dimension does not match the box");
            }
            double a = std::exp(-0.5 * g.squaredNorm() * b.width * b.width);
            s += b.charge * a * std::exp(cplx(0, -g.dot(b.center)));
        }
        f.coeffs[i] = s / box.volume;
    }
    // Nyquist-edge amplitude relative to the mean
    for (int j = 0; j < box.d; j++) {
        Index3 m{0, 0, 0};
        m[j] = grid[j] / 2;
        for (const auto& b : bumps) {
            double g2 = box.gvec(m).squaredNorm();
            tail = std::max(tail, std::exp(-0.5 * g2 * b.width * b.width));
        }
    }
    if (tail > 1e-12) {
        std::ostringstream os;
        os << "gaussian source under-resolved: Nyquist amplitude " << tail << "; refine the macro grid or widen the bump";
        warn(os.str());
    }
    f.make_real();
    return f;
}

double max_debye_length(double nu, const MatR& eps)
{
    Eigen::SelfAdjointEigenSolver<MatR> es(eps);
    return std::sqrt(es.eigenvalues().maxCoeff() / nu);
}

Lattice auto_box(int d, double nu, const MatR& eps, double lengths)
{
    double L = lengths * max_debye_length(nu, eps);
    return Lattice(MatR::Identity(d, d) * L);
}

double evaluate_at(const PeriodicField& f, const VecR& x)
{
    double s = 0;
    for (size_t i = 0; i < f.size(); i++) {
        s += (f.coeffs[i] * std::exp(cplx(0, f.wavevector(i).dot(x)))).real();
    }
    return s;
}

DecayFit debye_observables(const MacroProblem& p, const PeriodicField& psi, const VecR& center)
{
    p.validate();
    const int d = p.box.d;
    Eigen::SelfAdjointEigenSolver<MatR> es(p.eps);
    DecayFit fit;
    double lmax = std::sqrt(es.eigenvalues().maxCoeff() / p.nu);
    double width = std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; j++) {
        width = std::min(width, 2 * pi / p.box.reciprocal.col(j).norm());
    }
    fit.box_debye_lengths = width / lmax;
    fit.reliable = fit.box_debye_lengths >= 10;
    if (!fit.reliable) {
        std::ostringstream os;
        os << "macro box spans only " << fit.box_debye_lengths << " Debye lengths; decay fit unreliable";
        warn(os.str());
    }
    for (int a = 0; a < d; a++) {
        VecR u = es.eigenvectors().col(a);
        double expected = std::sqrt(p.nu / es.eigenvalues()[a]);
        double ell = 1 / expected;
        double rate = std::numeric_limits<double>::quiet_NaN();
        if (d == 1) {
            const double h = ell / 4;
            const double hi = width / 2;
            double sum = 0;
            int n = 0;
            for (double r = 2 * ell; r + h <= hi; r += h) {
                double y0 = evaluate_at(psi, center + (r - h) * u);
                double y1 = evaluate_at(psi, center + r * u);
                double y2 = evaluate_at(psi, center + (r + h) * u);
                double c = (y0 + y2) / (2 * y1);
                if (y1 > 0 && c >= 1) {
                    sum += std::acosh(c) / h;
                    n++;
                }
            }
            if (n > 0) {
                rate = sum / n;
            }
        } else {
            const int n = 16;
            VecR rs(n), ys(n);
            bool ok = true;
            for (int i = 0; i < n; i++) {
                double r = ell * (2 + 1.5 * i / (n - 1));
                double v = evaluate_at(psi, center + r * u);
                ok = ok && v > 0;
                rs[i] = r;
                ys[i] = std::log(std::max(v, 1e-300)) + 0.5 * (d - 1) * std::log(r);
            }
            if (ok) {
                double rm = rs.mean(), ym = ys.mean();
                double slope = ((rs.array() - rm) * (ys.array() - ym)).sum() / (rs.array() - rm).square().sum();
                rate = -slope;
            }
        }
        fit.axes.push_back(u);
        fit.rate.push_back(rate);
        fit.expected.push_back(expected);
        fit.rel_error.push_back(std::abs(rate - expected) / expected);
    }
    return fit;
}

MatR second_moments(const PeriodicField& f, const VecR& center)
{
    const int d = f.lattice.d;
    VecR v = f.real_values();
    MatR inv = f.lattice.basis.inverse();
    MatR mom = MatR::Zero(d, d);
    double mass = 0;
    for (size_t i = 0; i < f.size(); i++) {
        VecR frac = inv * (f.point(i) - center);
        for (int j = 0; j < d; j++) {
            frac[j] -= std::floor(frac[j] + 0.5);
        }
        VecR x = f.lattice.basis * frac;
        mom += v[i] * x * x.transpose();
        mass += v[i];
    }
    return mom / mass;
}

} // namespace debye
