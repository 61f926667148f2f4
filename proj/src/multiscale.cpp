// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

#include "debye/multiscale.hpp"

#include "debye/errors.hpp"
#include "debye/fft.hpp"
#include "debye/log.hpp"

#include <cmath>
#include <sstream>

namespace debye {

namespace {

bool is_zero_label(const Index3& j)
{
    return j[0] == 0 && j[1] == 0 && j[2] == 0;
}

double squared_norm(const VecR& v)
{
    return v.squaredNorm();
}

// sqrt(|Omega| sum_{q != 0} |f(q)|^2 / |q|^2).
double hminus1_norm(const PeriodicField& f)
{
    double s = 0;
    for (size_t i = 1; i < f.size(); i++) {
        s += std::norm(f.coeffs[i]) / f.wavevector(i).squaredNorm();
    }
    return std::sqrt(f.lattice.volume * s);
}

double delta_norm2(const PeriodicField& f, double zeta)
{
    double l2 = f.l2_norm();
    double h1 = f.h1_seminorm();
    return l2 * l2 / (zeta * zeta) + h1 * h1;
}

} // namespace

MicroProblem::MicroProblem(const CrystalState& base, int N)
    : base_(base)
    , N_(N)
{
    if (N < 1) {
        throw ConfigError("supercell factor N must be >= 1");
    }
    if (!base.converged) {
        throw NumericalError("micro problem: base crystal is not converged");
    }
    const Lattice& micro = base.basis.lattice;
    Index3 ks{1, 1, 1};
    for (int i = 0; i < micro.d; i++) {
        if (base.kgrid.n[i] % N != 0) {
            std::ostringstream os;
            os << "base k-grid " << base.kgrid.n[i] << " is not a multiple of the supercell factor " << N;
            throw ConfigError(os.str());
        }
        ks[i] = base.kgrid.n[i] / N;
    }
    basis_ = PlaneWaveBasis::tiled(base.basis, factors());
    kgrid_ = KGrid(basis_.lattice, ks);
    phi_per_ = tile(base.phi);
    DensityResult d0 = density_from_bands(basis_, bands(phi_per_), base.occ);
    rho_per_ = d0.rho;
    count_per_ = d0.count;
}

Index3 MicroProblem::factors() const
{
    Index3 n{1, 1, 1};
    for (int i = 0; i < base_.basis.lattice.d; i++) {
        n[i] = N_;
    }
    return n;
}

PeriodicField MicroProblem::zero() const
{
    return PeriodicField(lattice(), grid());
}

PeriodicField MicroProblem::tile(const PeriodicField& f) const
{
    PeriodicField out = zero();
    out.real = f.real;
    Index3 n = factors();
    for (size_t s = 0; s < f.size(); s++) {
        Index3 m = fft_freq(f.grid, s);
        Index3 q;
        for (int i = 0; i < 3; i++) {
            q[i] = n[i] * m[i];
        }
        long t = fft_slot(grid(), q);
        if (t >= 0) {
            out.coeffs[t] = f.coeffs[s];
        } else if (std::abs(f.coeffs[s]) > 1e-14) {
            throw ConfigError("micro field does not fit on the supercell grid");
        }
    }
    return out;
}

PeriodicField MicroProblem::density_change(const BandStructure& bands, double c) const
{
    OccupationModel occ = base_.occ;
    occ.mu += c;
    DensityResult d = density_from_bands(basis_, bands, occ);
    PeriodicField out = d.rho - rho_per_;
    double dq = (d.count.below - count_per_.below) + (d.count.thermal - count_per_.thermal);
    out.coeffs[0] = dq / lattice().volume;
    return out;
}

PeriodicField MicroProblem::density_change(const PeriodicField& psi, BandStructure* out_bands) const
{
    BandStructure bs = bands(phi_per_ + psi);
    PeriodicField out = density_change(bs, 0.0);
    if (out_bands != nullptr) {
        *out_bands = std::move(bs);
    }
    return out;
}

BandStructure MicroProblem::bands(const PeriodicField& phi) const
{
    return compute_bands(basis_, phi, kgrid_, base_.occ.mu + 30 * base_.occ.T);
}

double MicroProblem::constant_shift(const BandStructure& bands, double target) const
{
    auto excess = [&](double c) {
        OccupationModel occ = base_.occ;
        occ.mu += c;
        ChargeCount cc = charge_count(bands, occ);
        return (cc.below - count_per_.below) + (cc.thermal - count_per_.thermal) - target;
    };
    double lo = 0, hi = 0;
    double f0 = excess(0);
    if (f0 == 0) {
        return 0;
    }
    // Charge grows with c.
    double step = 1e-3;
    if (f0 < 0) {
        hi = step;
        while (excess(hi) < 0) {
            lo = hi;
            hi *= 2;
            if (hi > 1e3) {
                throw NumericalError("charge balance: no constant shift found");
            }
        }
    } else {
        lo = -step;
        while (excess(lo) > 0) {
            hi = lo;
            lo *= 2;
            if (lo < -1e3) {
                throw NumericalError("charge balance: no constant shift found");
            }
        }
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); it++) {
        double mid = 0.5 * (lo + hi);
        if (excess(mid) < 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

PeriodicField MicroProblem::residual(const PeriodicField& psi, const PeriodicField& kpd) const
{
    return apply_neg_laplacian(psi) + density_change(psi) - kpd;
}

void MicroProblem::build_fibers() const
{
    if (fibers_built_) {
        return;
    }
    const PlaneWaveBasis& mb = base_.basis;
    const int nd = mb.dens_size();
    KGrid fk(mb.lattice, factors());
    Index3 n = factors();
    fibers_.assign(fk.size(), Fiber{});
    for (int f = 0; f < fk.size(); f++) {
        Fiber& fb = fibers_[f];
        fb.label = fk.labels[f];
        fb.k = fk.kcart[f];
        fb.K = assemble_M_fiber(base_, fb.k);
        fb.slots.resize(nd);
        for (int g = 0; g < nd; g++) {
            fb.K(g, g) += squared_norm(fb.k + mb.dens_gcart.col(g));
            Index3 q;
            for (int i = 0; i < 3; i++) {
                q[i] = n[i] * mb.dens_miller[g][i] + fb.label[i];
            }
            fb.slots[g] = fft_slot(grid(), q);
        }
        if (is_zero_label(fb.label)) {
            fb.rest.compute(fb.K.bottomRightCorner(nd - 1, nd - 1));
            if (fb.rest.info() != Eigen::Success) {
                throw NumericalError("Jacobian block without G = 0 is not positive definite");
            }
            fb.col0 = fb.K.col(0).tail(nd - 1);
            fb.schur = fb.K(0, 0).real() - fb.col0.dot(fb.rest.solve(fb.col0)).real();
        } else {
            fb.full.compute(fb.K);
            if (fb.full.info() != Eigen::Success) {
                throw NumericalError("Jacobian fiber is not positive definite");
            }
        }
    }
    fibers_built_ = true;
}

VecC MicroProblem::gather_fiber(const PeriodicField& f, const Fiber& fb) const
{
    VecC x = VecC::Zero(fb.slots.size());
    for (size_t g = 0; g < fb.slots.size(); g++) {
        if (fb.slots[g] >= 0) {
            x[g] = f.coeffs[fb.slots[g]];
        }
    }
    return x;
}

void MicroProblem::scatter_fiber(PeriodicField& f, const Fiber& fb, const VecC& x) const
{
    for (size_t g = 0; g < fb.slots.size(); g++) {
        if (fb.slots[g] >= 0) {
            f.coeffs[fb.slots[g]] = x[g];
        }
    }
}

PeriodicField MicroProblem::apply_M(const PeriodicField& v) const
{
    build_fibers();
    const PlaneWaveBasis& mb = base_.basis;
    PeriodicField out = zero();
    out.real = v.real;
    for (const Fiber& fb : fibers_) {
        VecC x = gather_fiber(v, fb);
        VecC y = fb.K * x;
        for (int g = 0; g < mb.dens_size(); g++) {
            y[g] -= squared_norm(fb.k + mb.dens_gcart.col(g)) * x[g];
        }
        scatter_fiber(out, fb, y);
    }
    return out;
}

PeriodicField MicroProblem::apply_jacobian(const PeriodicField& v) const
{
    return apply_neg_laplacian(v) + apply_M(v);
}

PeriodicField MicroProblem::solve_jacobian(const PeriodicField& r) const
{
    build_fibers();
    PeriodicField out = zero();
    out.real = r.real;
    for (const Fiber& fb : fibers_) {
        VecC b = gather_fiber(r, fb);
        VecC x;
        if (is_zero_label(fb.label)) {
            const int nr = static_cast<int>(b.size()) - 1;
            VecC y = fb.rest.solve(b.tail(nr));
            VecC z = fb.rest.solve(fb.col0);
            cplx x0 = (b[0] - fb.col0.dot(y)) / fb.schur;
            x.resize(b.size());
            x[0] = x0;
            x.tail(nr) = y - z * x0;
        } else {
            x = fb.full.solve(b);
        }
        scatter_fiber(out, fb, x);
    }
    if (out.real) {
        out.make_real();
    }
    return out;
}

PeriodicField MicroProblem::solve_jacobian_nonconstant(const PeriodicField& r) const
{
    build_fibers();
    PeriodicField out = zero();
    out.real = r.real;
    for (const Fiber& fb : fibers_) {
        VecC b = gather_fiber(r, fb);
        VecC x;
        if (is_zero_label(fb.label)) {
            const int nr = static_cast<int>(b.size()) - 1;
            x = VecC::Zero(b.size());
            x.tail(nr) = fb.rest.solve(b.tail(nr));
        } else {
            x = fb.full.solve(b);
        }
        scatter_fiber(out, fb, x);
    }
    if (out.real) {
        out.make_real();
    }
    return out;
}

PeriodicField MicroProblem::nonlinearity(const PeriodicField& psi) const
{
    return density_change(psi) - apply_M(psi);
}

double DeformedCrystal::added_charge() const
{
    return kappa_prime_delta.integral();
}

double DeformedCrystal::expected_added_charge() const
{
    return std::pow(delta, exponent - kappa_prime.lattice.d) * kappa_prime.integral();
}

DeformedCrystal build_deformed_kappa(const CrystalState& base, int N, const std::vector<GaussianBump>& bumps,
                                     double exponent)
{
    DeformedCrystal dc;
    auto micro = std::make_shared<MicroProblem>(base, N);
    const Lattice& box = base.basis.lattice;
    const Index3& grid = micro->grid();
    for (const GaussianBump& b : bumps) {
        if (!(b.width > 0)) {
            throw ConfigError("kappa' bump width must be > 0");
        }
        for (int i = 0; i < box.d; i++) {
            double span = 2 * pi / box.reciprocal.col(i).norm();
            double overlap = std::exp(-span * span / (8 * b.width * b.width));
            if (overlap > 1e-8) {
                std::ostringstream os;
                os << "kappa' bump of width " << b.width << " overlaps its periodic images (" << overlap
                   << " > 1e-8); enlarge N or narrow the bump";
                throw ConfigError(os.str());
            }
            double qmax = (grid[i] / 2) * box.reciprocal.col(i).norm();
            double tail = std::exp(-0.5 * qmax * qmax * b.width * b.width);
            if (tail > 1e-8) {
                std::ostringstream os;
                os << "kappa' bump of width " << b.width << " is not resolved on the supercell grid";
                throw ConfigError(os.str());
            }
        }
    }
    dc.delta = 1.0 / N;
    dc.exponent = exponent;
    dc.bumps = bumps;
    dc.kappa_prime = bumps.empty() ? PeriodicField(box, grid) : gaussian_source(box, grid, bumps);
    dc.kappa_prime_delta = micro->zero();
    dc.kappa_prime_delta.coeffs = std::pow(dc.delta, exponent) * dc.kappa_prime.coeffs;
    dc.kappa_delta = micro->tile(base.kappa) + dc.kappa_prime_delta;
    dc.micro = micro;
    return dc;
}

namespace {

MatC dense_jacobian(const MicroProblem& P, const BandStructure& bands, double c)
{
    CrystalState sc;
    sc.basis = P.basis();
    sc.kgrid = P.kgrid();
    sc.occ = P.base().occ;
    sc.occ.mu += c;
    sc.bands = bands;
    sc.converged = true;
    MatC K = assemble_M_fiber(sc, VecR::Zero(P.lattice().d));
    for (int g = 0; g < P.basis().dens_size(); g++) {
        K(g, g) += P.basis().dens_gcart.col(g).squaredNorm();
    }
    return K;
}

PeriodicField dense_step(const MicroProblem& P, const MatC& K, const PeriodicField& r)
{
    const PlaneWaveBasis& b = P.basis();
    const int nr = b.dens_size() - 1;
    VecC rv = gather(r, b.dens_miller).tail(nr);
    Eigen::LLT<MatC> llt(K.bottomRightCorner(nr, nr));
    if (llt.info() != Eigen::Success) {
        throw RegimeViolation("relinearized Jacobian is not positive definite");
    }
    VecC x = VecC::Zero(nr + 1);
    x.tail(nr) = llt.solve(rv);
    PeriodicField out = scatter(P.lattice(), P.grid(), b.dens_miller, x);
    out.make_real();
    return out;
}

} // namespace

MicroSolution micro_solve_perturbation(const DeformedCrystal& dc, const NewtonOptions& opt)
{
    const MicroProblem& P = *dc.micro;
    MicroSolution sol;
    sol.psi = P.zero();
    const double kn = hminus1_norm(dc.kappa_prime_delta);
    const double kn2 = dc.kappa_prime_delta.l2_norm();
    if (kn == 0) {
        sol.phi_delta = P.phi_per();
        sol.residuals.push_back(0);
        sol.residuals_l2.push_back(0);
        sol.converged = true;
        return sol;
    }
    RegimeReport rr = nu_and_regime(P.base(), dc.delta);
    if (!rr.temperature_ok || !rr.theta_ok) {
        std::ostringstream os;
        os << "micro solve outside the asymptotic regime (c_T = " << rr.c_T << ", theta = " << rr.theta << ")";
        regime_warning(os.str());
    }
    const double target = dc.added_charge();

    struct Iterate
    {
        PeriodicField psi, R;
        BandStructure bands;
        double shift{0};
        double res{0}, res_l2{0};
    };
    // Bands of phi_per + psi, the constant fixed by charge balance, then the residual.
    auto evaluate = [&](PeriodicField psi) {
        Iterate it;
        it.bands = P.bands(P.phi_per() + psi);
        it.shift = P.constant_shift(it.bands, target);
        psi.coeffs[0] += it.shift;
        it.R = apply_neg_laplacian(psi) + P.density_change(it.bands, it.shift) - dc.kappa_prime_delta;
        it.psi = std::move(psi);
        it.res = hminus1_norm(it.R) / kn;
        it.res_l2 = it.R.l2_norm() / kn2;
        return it;
    };

    Iterate cur = evaluate(sol.psi);
    const double res0 = cur.res;
    sol.residuals.push_back(cur.res);
    sol.residuals_l2.push_back(cur.res_l2);
    bool stalled = false;
    for (int it = 0; it < opt.max_iter && !(cur.res < opt.tol) && !stalled; it++) {
        PeriodicField step = opt.relinearize
                                 ? dense_step(P, dense_jacobian(P, cur.bands, cur.shift), cur.R)
                                 : P.solve_jacobian_nonconstant(cur.R);
        double alpha = 1;
        while (true) {
            Iterate trial = evaluate(cur.psi - alpha * step);
            if (trial.res < cur.res) {
                cur = std::move(trial);
                break;
            }
            alpha /= 2;
            if (alpha < opt.min_step) {
                // A residual already reduced by 1e6 has reached rounding level; otherwise the iteration diverged.
                if (cur.res < 1e-6 * res0) {
                    stalled = true;
                    break;
                }
                std::ostringstream os;
                os << "Newton iteration diverged at residual " << cur.res << " after " << it << " steps";
                throw RegimeViolation(os.str());
            }
        }
        if (stalled) {
            break;
        }
        sol.steps.push_back(alpha);
        sol.residuals.push_back(cur.res);
        sol.residuals_l2.push_back(cur.res_l2);
        sol.iterations = it + 1;
    }
    sol.converged = cur.res < opt.tol;
    if (!sol.converged) {
        std::ostringstream os;
        os << "Newton stopped at residual " << cur.res << " after " << sol.iterations << " steps";
        warn(os.str());
    }
    sol.psi = cur.psi;
    sol.mean_shift = cur.psi.mean();
    sol.phi_delta = P.phi_per() + cur.psi;
    PeriodicField drho = P.density_change(cur.bands, cur.shift);
    sol.charge_defect = std::abs(drho.integral() - target);
    return sol;
}

SupercellField nonlinearity_N(const CrystalState& base, const SupercellField& psi)
{
    int N = psi.N[0];
    for (int i = 1; i < psi.dim(); i++) {
        if (psi.N[i] != N) {
            throw ConfigError("nonlinearity_N needs the same supercell factor on every axis");
        }
    }
    MicroProblem P(base, N);
    PeriodicField f = psi.field.grid == P.grid() ? psi.field : psi.field.regrid(P.grid());
    f.lattice = P.lattice();
    return SupercellField(P.nonlinearity(f), base.basis.lattice, psi.N);
}

MultiscaleReport expansion_decompose(const DeformedCrystal& dc, const MicroSolution& sol,
                                     const HomogenizedCoefficients& coeffs, double a)
{
    if (!(a > 0)) {
        throw ConfigError("momentum cut a must be > 0");
    }
    const MicroProblem& P = *dc.micro;
    MultiscaleReport rep;
    rep.N = P.N();
    rep.delta = dc.delta;
    rep.exponent = dc.exponent;
    rep.nu = coeffs.nu(dc.delta);
    rep.eps = coeffs.epsilon.eps;

    MacroProblem mp;
    mp.box = P.base().basis.lattice;
    mp.nu = rep.nu;
    mp.eps = coeffs.epsilon.eps;
    mp.source = dc.kappa_prime;
    rep.psi = solve_pb(mp);

    const double lead = std::pow(dc.delta, dc.exponent - 2);
    PeriodicField micro_psi = sol.psi;
    if (micro_psi.grid != P.grid()) {
        micro_psi = micro_psi.regrid(P.grid());
    }
    PeriodicField psi_macro = rep.psi.grid == P.grid() ? rep.psi : rep.psi.regrid(P.grid());
    rep.phi_rem = PeriodicField(mp.box, P.grid());
    rep.phi_rem.coeffs = micro_psi.coeffs - lead * psi_macro.coeffs;
    rep.phi_delta = sol.phi_delta;

    PeriodicField lead_field = psi_macro;
    lead_field *= lead;
    rep.rem_l2 = rep.phi_rem.l2_norm();
    rep.rem_h1 = rep.phi_rem.h1_seminorm();
    rep.lead_l2 = lead_field.l2_norm();
    rep.lead_h1 = lead_field.h1_seminorm();
    rep.zeta = dc.delta / std::sqrt(coeffs.m);
    double total = delta_norm2(rep.phi_rem, rep.zeta);
    rep.rem_delta_norm = std::sqrt(total);
    rep.a = a;
    rep.r = a / dc.delta;
    PeriodicField low = low_momentum_project(rep.phi_rem, rep.r);
    double low2 = delta_norm2(low, rep.zeta);
    rep.low_share = total > 0 ? low2 / total : 0;
    rep.high_share = total > 0 ? delta_norm2(rep.phi_rem - low, rep.zeta) / total : 0;

    // The macro fields read on the supercell: x = delta y keeps every Miller index.
    auto on_supercell = [&](const PeriodicField& f) {
        PeriodicField g = f;
        g.lattice = P.lattice();
        return g.real_values();
    };
    VecR defect = sol.phi_delta.real_values() - P.phi_per().real_values() - on_supercell(lead_field) -
                  on_supercell(rep.phi_rem);
    rep.decomposition_defect = defect.cwiseAbs().maxCoeff();

    PeriodicField phi_only = apply_neg_laplacian(sol.phi_delta) + P.rho_per() + P.density_change(micro_psi) -
                             dc.kappa_delta;
    rep.phi_only_residual = phi_only.l2_norm();
    rep.nonlinearity_l2 = P.nonlinearity(micro_psi).l2_norm();
    rep.mean_shift = sol.mean_shift;
    rep.newton_residuals = sol.residuals;
    rep.newton_iterations = sol.iterations;
    return rep;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw ConfigError("loglog_slope needs two equally long series of length >= 2");
    }
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; i++) {
        if (!(x[i] > 0) || !(y[i] > 0)) {
            throw ConfigError("loglog_slope needs positive data");
        }
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace debye
