// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file scf.cpp
 *  \brief SCF loop, chemical potential and dielectric construction.
 */

#include "debye/scf.hpp"
#include "debye/errors.hpp"
#include "debye/log.hpp"

#include <cmath>
#include <sstream>

namespace debye {

void SCFConfig::validate() const
{
    if (!(mixing > 0 && mixing <= 1)) {
        throw ConfigError("scf.mixing must lie in (0, 1]");
    }
    if (anderson_depth < 0) {
        throw ConfigError("scf.anderson_depth must be >= 0");
    }
    if (!(tol_residual > 0)) {
        throw ConfigError("scf.tol_residual must be positive");
    }
    if (max_iter < 1) {
        throw ConfigError("scf.max_iter must be >= 1");
    }
}

double CrystalState::poisson_residual() const
{
    PeriodicField r = apply_neg_laplacian(phi) - kappa + rho.regrid(phi.grid);
    return r.l2_norm();
}

double CrystalState::lambda_value() const
{
    return phi.h2_norm() + std::abs(occ.mu);
}

// ---------------------------------------------------------------------------
// chemical potential

namespace {

double charge_residual(const BandStructure& bands, double T, double mu, double target)
{
    OccupationModel occ{T, mu};
    ChargeCount c = charge_count(bands, occ);
    return (c.below - target) + c.thermal;
}

} // namespace

double solve_chemical_potential(const BandStructure& bands, double T, double target)
{
    if (!(target > 0)) {
        throw ConfigError("target charge must be positive");
    }
    double lo = bands.min_eigenvalue() - 50 * T * std::log(1e12);
    double hi = bands.max_eigenvalue();
    double rlo = charge_residual(bands, T, lo, target);
    double rhi = charge_residual(bands, T, hi, target);
    if (!(rlo < 0 && rhi > 0)) {
        std::ostringstream os;
        os << "unreachable charge " << target << ": bracket [" << lo << ", " << hi << "] gives charges ["
           << rlo + target << ", " << rhi + target << "]";
        throw UnreachableChargeError(os.str());
    }
    for (int it = 0; it < 400; it++) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        double r = charge_residual(bands, T, mid, target);
        if (r == 0) {
            return mid;
        }
        (r < 0 ? lo : hi) = mid;
    }
    double mu = 0.5 * (lo + hi);
    double res = std::abs(charge_residual(bands, T, mu, target));
    if (res >= 1e-12 * target) {
        std::ostringstream os;
        os << "chemical potential bisection stalled with charge error " << res;
        throw NumericalError(os.str());
    }
    return mu;
}

double solve_chemical_potential(const PlaneWaveBasis& basis, const PeriodicField& phi, double T, double target,
                                const KGrid& kgrid)
{
    return solve_chemical_potential(compute_bands(basis, phi, kgrid), T, target);
}

// ---------------------------------------------------------------------------
// SCF

namespace {

// Anderson (type II) update on complex coefficient vectors with the real inner product.
class Anderson
{
  public:
    Anderson(int depth, double alpha)
        : depth_(depth)
        , alpha_(alpha)
    {
    }

    VecC next(const VecC& x, const VecC& f)
    {
        VecC out = x + alpha_ * f;
        if (depth_ > 0 && !xs_.empty()) {
            int m = static_cast<int>(xs_.size());
            long n = x.size();
            MatR dF(2 * n, m);
            MatC dX(n, m), dFc(n, m);
            for (int j = 0; j < m; j++) {
                VecC df = f - fs_[j];
                dFc.col(j) = df;
                dX.col(j) = x - xs_[j];
                dF.col(j) << df.real(), df.imag();
            }
            VecR rhs(2 * n);
            rhs << f.real(), f.imag();
            VecR gamma = dF.completeOrthogonalDecomposition().solve(rhs);
            out -= (dX + alpha_ * dFc) * gamma.cast<cplx>();
        }
        xs_.push_back(x);
        fs_.push_back(f);
        if (static_cast<int>(xs_.size()) > depth_) {
            xs_.erase(xs_.begin());
            fs_.erase(fs_.begin());
        }
        return out;
    }

  private:
    int depth_;
    double alpha_;
    std::vector<VecC> xs_, fs_;
};

} // namespace

CrystalState scf_solve(const PlaneWaveBasis& basis, const PeriodicField& kappa_in, const SCFConfig& cfg, double T,
                       const KGrid& kgrid, const PeriodicField* phi0)
{
    cfg.validate();
    if (!(T > 0)) {
        throw ConfigError("temperature must be positive");
    }
    if (kappa_in.real && kappa_in.realness_defect() > 1e-12 * std::max(1.0, kappa_in.coeffs.cwiseAbs().maxCoeff())) {
        throw ConfigError("kappa_per must be real");
    }
    const Index3 grid = basis.fft_grid;
    PeriodicField kappa = kappa_in.regrid(grid);
    double target = std::isnan(cfg.target_charge) ? kappa.integral() : cfg.target_charge;
    if (cfg.mu_mode == MuMode::fixed_charge && !(kappa.mean() > 0)) {
        throw ConfigError("fixed-charge mode needs kappa_per with positive mean");
    }

    CrystalState st;
    st.basis = basis;
    st.kgrid = kgrid;
    st.kappa = kappa;
    st.occ = OccupationModel{T, cfg.mu};
    PeriodicField phi = phi0 ? phi0->regrid(grid) : PeriodicField(basis.lattice, grid);
    phi.coeffs[0] = 0;

    Anderson mixer(cfg.anderson_depth, cfg.mixing);
    double best = std::numeric_limits<double>::infinity();
    CrystalState best_state;
    for (int it = 0; it < cfg.max_iter; it++) {
        BandStructure bands = compute_bands(basis, phi, kgrid);
        // neutrality fixes mu (fixed_charge) or the mean of phi (fixed_mu)
        double mu_eff = solve_chemical_potential(bands, T, target);
        OccupationModel occ{T, mu_eff};
        DensityResult dens = density_from_bands(basis, bands, occ);
        PeriodicField rho = dens.rho.regrid(grid);
        st.charge_defects.push_back(std::abs(dens.charge - kappa.integral()));

        PeriodicField src = kappa - rho;
        src.coeffs[0] = 0;
        PeriodicField phi_out = apply_inverse_laplacian(src);
        PeriodicField diff = phi_out - phi;
        diff.coeffs[0] = 0;
        double res = apply_neg_laplacian(diff).l2_norm();
        st.residual_history.push_back(res);

        if (res < best) {
            best = res;
            best_state = st;
            best_state.phi = phi;
            best_state.rho = rho;
            best_state.bands = bands;
            best_state.iterations = it + 1;
            if (cfg.mu_mode == MuMode::fixed_charge) {
                best_state.occ.mu = mu_eff;
            } else {
                best_state.occ.mu = cfg.mu;
                best_state.phi.coeffs[0] = mu_eff - cfg.mu;
            }
        }
        if (res < cfg.tol_residual) {
            best_state.converged = true;
            break;
        }
        VecC next = mixer.next(phi.coeffs, diff.coeffs);
        phi.coeffs = next;
        phi.coeffs[0] = 0;
        phi.make_real();
    }
    best_state.residual_history = st.residual_history;
    best_state.charge_defects = st.charge_defects;
    if (!best_state.converged) {
        std::ostringstream os;
        os << "SCF did not converge in " << cfg.max_iter << " iterations (best residual " << best << ")";
        warn(os.str());
    }
    // bands of the stored phi (its mean shifts every eigenvalue down)
    double shift = best_state.phi.coeffs[0].real();
    for (auto& f : best_state.bands.fibers) {
        f.eval.array() -= shift;
    }
    best_state.gap = spectral_gap(best_state.bands, best_state.occ.mu);
    best_state.dielectric = best_state.gap.in_gap;
    return best_state;
}

CrystalState construct_dielectric_kappa(const PlaneWaveBasis& basis, const PeriodicField& phi_in,
                                        const OccupationModel& occ, const KGrid& kgrid)
{
    if (!(occ.T > 0)) {
        throw ConfigError("temperature must be positive");
    }
    const Index3 grid = basis.fft_grid;
    PeriodicField phi = phi_in.regrid(grid);
    if (phi.realness_defect() > 1e-12 * std::max(1.0, phi.coeffs.cwiseAbs().maxCoeff())) {
        throw ConfigError("phi_per must be real");
    }
    CrystalState st;
    st.basis = basis;
    st.kgrid = kgrid;
    st.occ = occ;
    st.phi = phi;
    st.bands = compute_bands(basis, phi, kgrid);
    st.gap = spectral_gap(st.bands, occ.mu);
    if (!st.gap.in_gap) {
        std::ostringstream os;
        os << "dielectricity precondition: mu = " << occ.mu << " is not inside a spectral gap (eta = " << st.gap.eta
           << ")";
        throw DielectricityError(os.str());
    }
    DensityResult dens = density_from_bands(basis, st.bands, occ);
    st.rho = dens.rho.regrid(grid);
    st.kappa = apply_neg_laplacian(phi) + st.rho;
    st.converged = true;
    st.dielectric = true;
    st.iterations = 0;
    st.residual_history = {st.poisson_residual()};
    st.charge_defects = {std::abs(st.rho.integral() - st.kappa.integral())};
    return st;
}

DielectricityReport verify_dielectricity(const CrystalState& st, double lambda_bound)
{
    DielectricityReport r;
    r.eta = st.gap.eta;
    r.eta0 = st.gap.eta0;
    r.mu_in_gap = st.gap.in_gap;
    r.lambda_value = st.lambda_value();
    r.lambda_bound = lambda_bound;
    r.lambda_ok = r.lambda_value <= lambda_bound;
    r.c_T = std::exp(-r.eta0 / st.occ.T) / st.occ.T;
    return r;
}

} // namespace debye
