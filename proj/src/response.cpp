// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

#include "debye/response.hpp"

#include "debye/contour.hpp"
#include "debye/errors.hpp"
#include "debye/fft.hpp"
#include "debye/log.hpp"
#include "debye/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace debye {

namespace {

void require_gapped(const CrystalState& c, const char* what)
{
    if (!c.converged) {
        throw NumericalError(std::string(what) + ": crystal state is not converged");
    }
    GapReport g = spectral_gap(c.bands, c.occ.mu);
    if (!g.in_gap || !(g.eta > 0)) {
        std::ostringstream os;
        os << what << ": mu = " << c.occ.mu << " is not inside a spectral gap (eta = " << g.eta << ")";
        throw DielectricityError(os.str());
    }
}

// Wave-function index pairs (i1, i0) with G_i1 - G_i0 = G'_g, per density index g.
struct PairTable
{
    std::vector<std::vector<int>> i1, i0;
};

PairTable pair_table(const PlaneWaveBasis& b)
{
    const int nd = b.dens_size();
    PairTable t;
    t.i1.resize(nd);
    t.i0.resize(nd);
    for (int a = 0; a < b.size(); a++) {
        for (int c = 0; c < b.size(); c++) {
            Index3 m;
            for (int i = 0; i < 3; i++) {
                m[i] = b.miller[a][i] - b.miller[c][i];
            }
            int g = b.dens_index(m);
            if (g >= 0) {
                t.i1[g].push_back(a);
                t.i0[g].push_back(c);
            }
        }
    }
    return t;
}

// Flat pair indices n + nb m: every intraband pair (these alone carry the G = 0 response)
// and interband pairs whose weight is not negligible against the largest one.
std::vector<int> significant_pairs(const MatR& W)
{
    const double cut = 1e-18 * W.cwiseAbs().maxCoeff();
    const Eigen::Index na = W.rows();
    std::vector<int> sel;
    for (Eigen::Index i = 0; i < W.size(); i++) {
        if (i % na == i / na || std::abs(W.data()[i]) > cut) {
            sel.push_back(static_cast<int>(i));
        }
    }
    return sel;
}

// X(s, g) = B_nm(G'_g) = sum_{G2} conj(C1(G2 + G'_g, n)) C0(G2, m) for sel[s] = n + nb m.
// With `gamma` the G' = 0 column is set to the exact identity delta_nm.
MatC pair_overlaps(const PairTable& t, const MatC& C1, const MatC& C0, const std::vector<int>& sel, bool gamma)
{
    const int nb = static_cast<int>(C1.cols());
    const int nd = static_cast<int>(t.i1.size());
    const int ns = static_cast<int>(sel.size());
    MatC X(ns, nd);
    MatC A, B;
    for (int g = 0; g < nd; g++) {
        const int sz = static_cast<int>(t.i1[g].size());
        A.resize(sz, nb);
        B.resize(sz, nb);
        for (int r = 0; r < sz; r++) {
            A.row(r) = C1.row(t.i1[g][r]);
            B.row(r) = C0.row(t.i0[g][r]);
        }
        for (int q = 0; q < ns; q++) {
            X(q, g) = A.col(sel[q] % nb).dot(B.col(sel[q] / nb));
        }
    }
    if (gamma) {
        for (int q = 0; q < ns; q++) {
            X(q, 0) = (sel[q] % nb == sel[q] / nb) ? 1.0 : 0.0;
        }
    }
    return X;
}

// Divided-difference weight W(i, j) with node pattern (ea_i^pa, eb_j):
// pa = 1: f[a, b], pa = 2: f[a, a, b], pa = 3: f[a, a, a, b].
MatR pair_weights(const OccupationModel& occ, const VecR& ea, const VecR& eb, int pa, Route route)
{
    const int na = static_cast<int>(ea.size());
    const int nb = static_cast<int>(eb.size());
    MatR W(na, nb);
    if (route == Route::eigen) {
        double nodes[4];
        for (int j = 0; j < nb; j++) {
            for (int i = 0; i < na; i++) {
                for (int q = 0; q < pa; q++) {
                    nodes[q] = ea[i];
                }
                nodes[pa] = eb[j];
                W(i, j) = divided_difference(occ, std::span<const double>(nodes, pa + 1));
            }
        }
        return W;
    }
    if (occ.zero_temperature) {
        throw ConfigError("contour route needs T > 0");
    }
    double emin = std::min(ea.minCoeff(), eb.minCoeff());
    double eta = std::min((ea.array() - occ.mu).abs().minCoeff(), (eb.array() - occ.mu).abs().minCoeff());
    ContourSpec spec = make_contour_spec(occ, emin, eta, 1e-12);
    VecC ra(na), rb(nb);
    ContourResult r = contour_integrate(spec, na * nb, [&](cplx z, cplx* out) {
        for (int i = 0; i < na; i++) {
            ra[i] = std::pow(1.0 / (z - ea[i]), pa);
        }
        for (int j = 0; j < nb; j++) {
            rb[j] = 1.0 / (z - eb[j]);
        }
        for (int j = 0; j < nb; j++) {
            for (int i = 0; i < na; i++) {
                out[i + na * j] = ra[i] * rb[j];
            }
        }
    });
    for (int j = 0; j < nb; j++) {
        for (int i = 0; i < na; i++) {
            W(i, j) = r.value[i + na * j].real();
        }
    }
    return W;
}

// v_j = C^H diag(2 (G + p)_j) C.
MatC velocity(const PlaneWaveBasis& basis, const FiberEigen& e, int j)
{
    VecR g(basis.size());
    for (int i = 0; i < basis.size(); i++) {
        g[i] = 2 * (basis.gcart(j, i) + e.k[j]);
    }
    return e.evec.adjoint() * g.asDiagonal() * e.evec;
}

// Density-sphere coefficients of rho'_j, j = 0..d-1.
std::vector<VecC> rho_prime_coeffs(const CrystalState& c, Route route)
{
    const PlaneWaveBasis& basis = c.basis;
    const int d = basis.lattice.d;
    const int nk = static_cast<int>(c.bands.fibers.size());
    const PairTable t = pair_table(basis);
    std::vector<std::vector<VecC>> part(nk);
    parallel_for(nk, [&](int ip) {
        const FiberEigen& e = c.bands.fibers[ip];
        MatR W = pair_weights(c.occ, e.eval, e.eval, 2, route);
        std::vector<int> sel = significant_pairs(W);
        MatC X = pair_overlaps(t, e.evec, e.evec, sel, true);
        part[ip].resize(d);
        for (int j = 0; j < d; j++) {
            MatC v = velocity(basis, e, j);
            VecC y(sel.size());
            for (size_t q = 0; q < sel.size(); q++) {
                y[q] = W.data()[sel[q]] * v.data()[sel[q]];
            }
            part[ip][j] = X.adjoint() * y;
        }
    });
    std::vector<VecC> out(d, VecC::Zero(basis.dens_size()));
    for (int ip = 0; ip < nk; ip++) {
        for (int j = 0; j < d; j++) {
            out[j] += part[ip][j];
        }
    }
    for (auto& v : out) {
        v /= (nk * basis.lattice.volume);
    }
    return out;
}

MatR eps_prime(const CrystalState& c, Route route, double* eps1)
{
    const PlaneWaveBasis& basis = c.basis;
    const int d = basis.lattice.d;
    const int nk = static_cast<int>(c.bands.fibers.size());
    std::vector<MatR> part(nk, MatR::Zero(d, d));
    std::vector<double> diag(nk, 0);
    parallel_for(nk, [&](int ip) {
        const FiberEigen& e = c.bands.fibers[ip];
        MatR W = pair_weights(c.occ, e.eval, e.eval, 3, route);
        std::vector<MatC> v;
        for (int j = 0; j < d; j++) {
            v.push_back(velocity(basis, e, j));
        }
        for (int i = 0; i < d; i++) {
            for (int j = 0; j < d; j++) {
                part[ip](i, j) = (W.cast<cplx>().cwiseProduct(v[i]).cwiseProduct(v[j].transpose())).sum().real();
            }
        }
        if (!c.occ.zero_temperature) {
            for (int n = 0; n < e.eval.size(); n++) {
                diag[ip] += fermi_dirac(e.eval[n] - c.occ.mu, c.occ, 2);
            }
        }
    });
    MatR ep = MatR::Zero(d, d);
    double s = 0;
    for (int ip = 0; ip < nk; ip++) {
        ep += part[ip];
        s += diag[ip];
    }
    const double norm = nk * basis.lattice.volume;
    if (eps1 != nullptr) {
        *eps1 = -s / (2 * norm);
    }
    return -ep / norm;
}

EpsilonResult epsilon_from(const CrystalState& c, const MatC& M0, const std::vector<VecC>& rp, Route route)
{
    const int d = c.basis.lattice.d;
    EpsilonResult r;
    r.eps_p = eps_prime(c, route, &r.eps1);
    MatC K = kbar0(c, M0, &r.kbar_cond);
    const int nr = static_cast<int>(K.rows());
    Eigen::LLT<MatC> llt(K);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("Kbar_0 is not positive definite");
    }
    MatC R(nr, d);
    for (int j = 0; j < d; j++) {
        R.col(j) = rp[j].tail(nr);
    }
    MatC S = R.adjoint() * llt.solve(R);
    r.eps_pp = S.real();
    r.eps_pp = 0.5 * (r.eps_pp + r.eps_pp.transpose()).eval();
    r.eps_p = 0.5 * (r.eps_p + r.eps_p.transpose()).eval();
    r.eps = MatR::Identity(d, d) + r.eps_p - r.eps_pp;
    return r;
}

} // namespace

MatC assemble_M_fiber(const CrystalState& c, const VecR& k, Route route)
{
    require_gapped(c, "assemble_M_fiber");
    const PlaneWaveBasis& basis = c.basis;
    const int nk = static_cast<int>(c.bands.fibers.size());
    const bool gamma = k.norm() == 0;
    const PairTable t = pair_table(basis);
    std::vector<MatC> part(nk);
    parallel_for(nk, [&](int ip) {
        const FiberEigen& e0 = c.bands.fibers[ip];
        FiberEigen shifted;
        const FiberEigen* e1 = &e0;
        if (!gamma) {
            shifted = diagonalize_fiber(assemble_fiber(basis, c.phi, e0.k + k, false));
            e1 = &shifted;
        }
        MatR W = pair_weights(c.occ, e1->eval, e0.eval, 1, route);
        std::vector<int> sel = significant_pairs(W);
        MatC X = pair_overlaps(t, e1->evec, e0.evec, sel, gamma);
        VecR w(sel.size());
        for (size_t q = 0; q < sel.size(); q++) {
            w[q] = W.data()[sel[q]];
        }
        part[ip] = -(X.adjoint() * (w.asDiagonal() * X));
    });
    MatC M = MatC::Zero(basis.dens_size(), basis.dens_size());
    for (int ip = 0; ip < nk; ip++) {
        M += part[ip];
    }
    M /= (nk * basis.lattice.volume);
    return 0.5 * (M + M.adjoint());
}

PeriodicField screening_density_V(const CrystalState& c)
{
    require_gapped(c, "screening_density_V");
    const PlaneWaveBasis& basis = c.basis;
    const Index3 grid = basis.fft_grid;
    const size_t ng = grid_size(grid);
    const int nk = static_cast<int>(c.bands.fibers.size());
    std::vector<long> slots(basis.size());
    for (int i = 0; i < basis.size(); i++) {
        slots[i] = fft_slot(grid, basis.miller[i]);
    }
    std::vector<VecR> partial(nk, VecR::Zero(ng));
    parallel_for(nk, [&](int ik) {
        const FiberEigen& f = c.bands.fibers[ik];
        VecC cf(ng), u(ng);
        for (int n = 0; n < f.eval.size(); n++) {
            double w = -fermi_dirac(f.eval[n] - c.occ.mu, c.occ, 1);
            if (w == 0) {
                continue;
            }
            cf.setZero();
            for (int i = 0; i < basis.size(); i++) {
                cf[slots[i]] = f.evec(i, n);
            }
            fft_to_grid(grid, cf.data(), u.data());
            partial[ik] += w * u.cwiseAbs2();
        }
    });
    VecR v = VecR::Zero(ng);
    for (int ik = 0; ik < nk; ik++) {
        v += partial[ik];
    }
    v /= (nk * basis.lattice.volume);
    return PeriodicField::from_real_values(basis.lattice, grid, v);
}

double screening_mass_m(const CrystalState& c)
{
    require_gapped(c, "screening_mass_m");
    double s = 0;
    for (const auto& f : c.bands.fibers) {
        for (int n = 0; n < f.eval.size(); n++) {
            s -= fermi_dirac(f.eval[n] - c.occ.mu, c.occ, 1);
        }
    }
    return s / static_cast<double>(c.bands.fibers.size());
}

std::vector<PeriodicField> rho_prime(const CrystalState& c, Route route)
{
    require_gapped(c, "rho_prime");
    std::vector<VecC> rp = rho_prime_coeffs(c, route);
    std::vector<PeriodicField> out;
    for (auto& v : rp) {
        out.push_back(scatter(c.basis.lattice, c.basis.fft_grid, c.basis.dens_miller, v, false));
    }
    return out;
}

MatC kbar0(const CrystalState& c, const MatC& M0, double* cond)
{
    const PlaneWaveBasis& basis = c.basis;
    const int nr = basis.dens_size() - 1;
    MatC K = M0.bottomRightCorner(nr, nr);
    for (int i = 0; i < nr; i++) {
        K(i, i) += basis.dens_gcart.col(i + 1).squaredNorm();
    }
    Eigen::SelfAdjointEigenSolver<MatC> es(K, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    double kc = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (cond != nullptr) {
        *cond = kc;
    }
    if (!(kc < 1e14)) {
        std::ostringstream os;
        os << "Kbar_0 numerically singular (condition number " << kc << ")";
        throw NumericalError(os.str());
    }
    return K;
}

EpsilonResult epsilon_matrix(const CrystalState& c, Route route)
{
    require_gapped(c, "epsilon_matrix");
    MatC M0 = assemble_M_fiber(c, VecR::Zero(c.basis.lattice.d), route);
    return epsilon_from(c, M0, rho_prime_coeffs(c, route), route);
}

EpsilonResult epsilon_zero_temperature(const CrystalState& crystal)
{
    require_gapped(crystal, "epsilon_zero_temperature");
    CrystalState c = crystal;
    c.occ = crystal.occ.at_zero_temperature();
    return epsilon_matrix(c, Route::eigen);
}

double b_from_fiber(const PlaneWaveBasis& basis, const MatC& Mk, const VecR& k)
{
    const int nd = basis.dens_size();
    MatC K = Mk;
    for (int i = 0; i < nd; i++) {
        K(i, i) += (basis.dens_gcart.col(i) + k).squaredNorm();
    }
    const int nr = nd - 1;
    Eigen::LLT<MatC> llt(K.bottomRightCorner(nr, nr));
    if (llt.info() != Eigen::Success) {
        throw NumericalError("K_k restricted to G != 0 is not positive definite");
    }
    VecC col = K.col(0).tail(nr);
    cplx s = K(0, 0) - (col.adjoint() * llt.solve(col))(0, 0);
    return s.real();
}

double b_function(const CrystalState& c, const VecR& k)
{
    return b_from_fiber(c.basis, assemble_M_fiber(c, k), k);
}

BFit fit_b_samples(int d, const std::vector<VecR>& k, const std::vector<double>& b, int max_degree)
{
    if (max_degree != 4 && max_degree != 6) {
        throw ConfigError("fit_b_expansion: max_degree must be 4 or 6");
    }
    std::vector<Index3> terms;
    const int lim = max_degree;
    for (int a = 0; a <= lim; a++) {
        for (int bb = 0; bb <= (d > 1 ? lim : 0); bb++) {
            for (int cc = 0; cc <= (d > 2 ? lim : 0); cc++) {
                int s = a + bb + cc;
                if (s % 2 == 0 && s <= lim) {
                    terms.push_back({a, bb, cc});
                }
            }
        }
    }
    std::stable_sort(terms.begin(), terms.end(),
                     [](const Index3& x, const Index3& y) { return x[0] + x[1] + x[2] < y[0] + y[1] + y[2]; });
    const int n = static_cast<int>(k.size());
    double scale = 0;
    for (auto& q : k) {
        scale = std::max(scale, q.norm());
    }
    if (n < 12 || scale == 0) {
        throw ConfigError("fit_b_expansion: need at least 12 samples with nonzero k; enlarge the sample set");
    }
    auto design = [&](int nterms) {
        MatR A(n, nterms);
        for (int i = 0; i < n; i++) {
            for (int t = 0; t < nterms; t++) {
                double v = 1;
                for (int j = 0; j < d; j++) {
                    v *= std::pow(k[i][j] / scale, terms[t][j]);
                }
                A(i, t) = v;
            }
        }
        return A;
    };
    VecR rhs = Eigen::Map<const VecR>(b.data(), n);
    auto solve = [&](int nterms, VecR& coef) {
        MatR A = design(nterms);
        Eigen::JacobiSVD<MatR> svd(A);
        const VecR& sv = svd.singularValues();
        if (n < nterms || sv[sv.size() - 1] <= 1e-12 * sv[0]) {
            throw ConfigError("fit_b_expansion: ill-conditioned design matrix; enlarge the sample set");
        }
        coef = A.colPivHouseholderQr().solve(rhs);
        return std::sqrt((A * coef - rhs).squaredNorm() / n);
    };
    int nquad = 0;
    while (nquad < static_cast<int>(terms.size()) && terms[nquad][0] + terms[nquad][1] + terms[nquad][2] <= 2) {
        nquad++;
    }
    BFit r;
    r.max_degree = max_degree;
    r.k = k;
    r.b = b;
    VecR coef, cq;
    r.fit_residual = solve(static_cast<int>(terms.size()), coef);
    r.quartic_residual = solve(nquad, cq);
    r.b0 = coef[0];
    r.eps_fit = MatR::Zero(d, d);
    for (int t = 1; t < nquad; t++) {
        double c = coef[t] / (scale * scale);
        int i = -1, j = -1;
        for (int q = 0; q < d; q++) {
            if (terms[t][q] == 2) {
                i = j = q;
            } else if (terms[t][q] == 1) {
                (i < 0 ? i : j) = q;
            }
        }
        if (i == j) {
            r.eps_fit(i, i) = c;
        } else {
            r.eps_fit(i, j) = r.eps_fit(j, i) = c / 2;
        }
    }
    return r;
}

BFit fit_b_expansion(const CrystalState& c, const std::vector<VecR>& k_samples, int max_degree)
{
    const double kmax = 0.2 * c.basis.lattice.min_reciprocal_length();
    for (auto& k : k_samples) {
        if (k.norm() > kmax * (1 + 1e-12)) {
            std::ostringstream os;
            os << "fit_b_expansion: |k| = " << k.norm() << " exceeds 0.2 x shortest reciprocal vector (" << kmax << ")";
            throw ConfigError(os.str());
        }
    }
    std::vector<double> b(k_samples.size());
    for (size_t i = 0; i < k_samples.size(); i++) {
        b[i] = b_function(c, k_samples[i]);
    }
    return fit_b_samples(c.basis.lattice.d, k_samples, b, max_degree);
}

std::vector<VecR> default_k_samples(const Lattice& lat, double kmax, int n)
{
    if (n < 1 || !(kmax > 0)) {
        throw ConfigError("k samples: need n >= 1 and kmax > 0");
    }
    std::vector<VecR> dirs;
    if (lat.d == 1) {
        dirs.push_back(VecR::Ones(1));
    } else if (lat.d == 2) {
        for (int j = 0; j < 8; j++) {
            double a = pi * j / 8;
            VecR v(2);
            v << std::cos(a), std::sin(a);
            dirs.push_back(v);
        }
    } else {
        const int nd = 32;
        const double golden = pi * (3 - std::sqrt(5.0));
        for (int j = 0; j < nd; j++) {
            double z = 1 - (j + 0.5) / nd;
            double rr = std::sqrt(1 - z * z);
            VecR v(3);
            v << rr * std::cos(golden * j), rr * std::sin(golden * j), z;
            dirs.push_back(v);
        }
    }
    std::vector<VecR> out;
    out.push_back(VecR::Zero(lat.d));
    for (auto& u : dirs) {
        for (int i = 1; i <= n; i++) {
            out.push_back(u * (kmax * i / n));
        }
    }
    return out;
}

std::vector<EllEntry> feshbach_ell(const CrystalState& c, double delta, double r, const std::vector<VecR>& k_samples)
{
    const double a = delta * r;
    const double rin = inscribed_bz_radius(c.basis.lattice);
    if (a > rin) {
        std::ostringstream os;
        os << "feshbach_ell: ball of radius delta r = " << a << " leaves the Brillouin zone (inscribed radius " << rin
           << ")";
        throw ConfigError(os.str());
    }
    std::vector<EllEntry> out;
    for (auto& k : k_samples) {
        if (k.norm() > r * (1 + 1e-12)) {
            continue;
        }
        out.push_back({k, b_function(c, delta * k) / (delta * delta)});
    }
    return out;
}

RegimeReport regime_from(const CrystalState& c, double delta, double b0, double m, double alpha,
                           double theta_threshold)
{
    RegimeReport r;
    r.nu = b0 / (delta * delta);
    r.debye_length = r.nu > 0 ? 1 / std::sqrt(r.nu) : std::numeric_limits<double>::quiet_NaN();
    r.c_T = c.occ.beta() * std::exp(-c.gap.eta0 * c.occ.beta());
    r.zeta = delta / std::sqrt(m);
    r.theta = std::pow(m, -8.0 / 9.0) * delta;
    r.alpha = alpha;
    r.theta_threshold = theta_threshold;
    r.temperature_ok = r.c_T <= alpha;
    r.theta_ok = r.theta <= theta_threshold;
    return r;
}

RegimeReport nu_and_regime(const CrystalState& c, double delta, double alpha, double theta_threshold)
{
    const int d = c.basis.lattice.d;
    double b0 = b_from_fiber(c.basis, assemble_M_fiber(c, VecR::Zero(d)), VecR::Zero(d));
    return regime_from(c, delta, b0, screening_mass_m(c), alpha, theta_threshold);
}

double HomogenizedCoefficients::debye_length(double delta) const
{
    double n = nu(delta);
    return n > 0 ? 1 / std::sqrt(n) : std::numeric_limits<double>::quiet_NaN();
}

HomogenizedCoefficients homogenized_coefficients(const CrystalState& c, Route route)
{
    require_gapped(c, "homogenized_coefficients");
    const int d = c.basis.lattice.d;
    HomogenizedCoefficients h;
    MatC M0 = assemble_M_fiber(c, VecR::Zero(d), route);
    h.V = screening_density_V(c);
    h.m = screening_mass_m(c);
    std::vector<VecC> rp = rho_prime_coeffs(c, route);
    for (auto& v : rp) {
        h.rho_prime.push_back(scatter(c.basis.lattice, c.basis.fft_grid, c.basis.dens_miller, v, false));
    }
    h.epsilon = epsilon_from(c, M0, rp, route);
    h.b0 = b_from_fiber(c.basis, M0, VecR::Zero(d));
    h.eta0 = c.gap.eta0;
    h.s_beta = c.occ.beta() * std::exp(-c.gap.eta0 * c.occ.beta());
    h.c_T = h.s_beta;
    return h;
}

} // namespace debye
