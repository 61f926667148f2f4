// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

#include "debye/pipeline.hpp"

#include "debye/errors.hpp"
#include "debye/log.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace debye {

using nlohmann::json;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

json vec_json(const VecR& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); i++) {
        a.push_back(v[i]);
    }
    return a;
}

json mat_json(const MatR& m)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); i++) {
        a.push_back(vec_json(m.row(i).transpose()));
    }
    return a;
}

MatR mat_from_json(const json& a)
{
    const int n = static_cast<int>(a.size());
    MatR m(n, n);
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < n; j++) {
            m(i, j) = a[i][j].get<double>();
        }
    }
    return m;
}

json idx_json(const Index3& v, int d)
{
    json a = json::array();
    for (int i = 0; i < d; i++) {
        a.push_back(v[i]);
    }
    return a;
}

/// JSON cannot hold inf; the missing band edge below mu is written as null.
json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json gap_json(const GapReport& g)
{
    return {{"eta", g.eta},
            {"eta0", g.eta0},
            {"edge_below", finite_or_null(g.edge_below)},
            {"edge_above", finite_or_null(g.edge_above)},
            {"bands_below", g.bands_below},
            {"in_gap", g.in_gap}};
}

fs::path root_of(const RunConfig& c)
{
    return fs::path(c.output);
}

std::vector<int> supercell_factors(const RunConfig& c)
{
    std::vector<int> Ns;
    for (double dl : c.multiscale.deltas) {
        Ns.push_back(static_cast<int>(std::lround(1 / dl)));
    }
    return Ns;
}

/// kappa' bumps with fractional centers mapped to the cell.
std::vector<GaussianBump> cell_bumps(const RunConfig& c, const Lattice& lat)
{
    std::vector<GaussianBump> bs = c.multiscale.bumps;
    for (auto& b : bs) {
        b.center = lat.basis * b.center;
    }
    return bs;
}

json run_crystal(const RunConfig& c)
{
    auto t0 = clock_type::now();
    CrystalState st = build_crystal(c);
    double t_solve = seconds_since(t0);
    if (!st.converged) {
        std::ostringstream os;
        os << "crystal: SCF did not converge in " << st.iterations << " iterations (last residual "
           << (st.residual_history.empty() ? 0.0 : st.residual_history.back()) << ")";
        throw NumericalError(os.str());
    }
    const int d = c.d();
    StageWriter w(stage_dir(root_of(c), "crystal"), "crystal");
    json j;
    j["crystal_key"] = crystal_key(c);
    j["mode"] = c.mode == CrystalMode::scf ? "scf" : "construct";
    j["d"] = d;
    j["basis"] = mat_json(st.basis.lattice.basis);
    j["ecut"] = st.basis.ecut;
    j["kgrid"] = idx_json(st.kgrid.n, d);
    j["wf_basis_size"] = st.basis.size();
    j["density_basis_size"] = st.basis.dens_size();
    j["fft_grid"] = idx_json(st.basis.fft_grid, d);
    j["T"] = st.occ.T;
    j["beta"] = st.occ.beta();
    j["mu"] = st.occ.mu;
    j["gap"] = gap_json(st.gap);
    j["dielectric"] = st.dielectric;
    j["converged"] = st.converged;
    j["iterations"] = st.iterations;
    j["residual_history"] = st.residual_history;
    j["charge_defects"] = st.charge_defects;
    j["poisson_residual"] = st.poisson_residual();
    j["kappa_integral"] = st.kappa.integral();
    j["rho_integral"] = st.rho.integral();
    j["lambda_value"] = st.lambda_value();
    w.json_file("crystal.json", j);
    w.field_file("phi.dbyf", st.phi);
    w.field_file("kappa.dbyf", st.kappa);
    w.field_file("rho.dbyf", st.rho);
    w.finish(config_hash(c), {{"solve", t_solve}, {"total", seconds_since(t0)}});
    return j;
}

json run_response(const RunConfig& c)
{
    auto t0 = clock_type::now();
    CrystalState st = load_crystal(c, root_of(c));
    const ResponseParams& p = c.response;
    const Lattice& lat = st.basis.lattice;
    HomogenizedCoefficients hc = homogenized_coefficients(st, p.route);
    double t_coeff = seconds_since(t0);
    std::vector<VecR> ks = default_k_samples(lat, p.kmax, p.k_samples);
    BFit fit = fit_b_expansion(st, ks, p.fit_degree);
    RegimeReport reg = regime_from(st, p.delta, hc.b0, hc.m, p.alpha, p.theta_threshold);
    double r = p.a / p.delta;
    std::vector<EllEntry> ell = feshbach_ell(st, p.delta, r, default_k_samples(lat, r, p.k_samples));
    if (!reg.temperature_ok) {
        regime_warning("response: c_T = " + std::to_string(reg.c_T) + " exceeds alpha; outside the low-temperature regime");
    }
    if (!reg.theta_ok) {
        regime_warning("response: m^{-8/9} delta = " + std::to_string(reg.theta) + " exceeds the threshold");
    }

    StageWriter w(stage_dir(root_of(c), "response"), "response");
    const int d = lat.d;
    json j;
    j["route"] = p.route == Route::eigen ? "eigen" : "contour";
    j["m"] = hc.m;
    j["b0"] = hc.b0;
    j["eta0"] = hc.eta0;
    j["s_beta"] = hc.s_beta;
    j["c_T"] = hc.c_T;
    j["eps"] = mat_json(hc.epsilon.eps);
    j["eps_p"] = mat_json(hc.epsilon.eps_p);
    j["eps_pp"] = mat_json(hc.epsilon.eps_pp);
    j["eps1"] = hc.epsilon.eps1;
    j["kbar_cond"] = hc.epsilon.kbar_cond;
    Eigen::SelfAdjointEigenSolver<MatR> es(hc.epsilon.eps);
    j["eps_lambda_min"] = es.eigenvalues().minCoeff();
    j["fit"] = {{"b0", fit.b0},
                {"eps_fit", mat_json(fit.eps_fit)},
                {"degree", fit.max_degree},
                {"quartic_residual", fit.quartic_residual},
                {"fit_residual", fit.fit_residual},
                {"kmax", p.kmax},
                {"samples", static_cast<int>(fit.k.size())}};
    j["regime"] = {{"delta", p.delta},       {"nu", reg.nu},
                   {"debye_length", reg.debye_length}, {"c_T", reg.c_T},
                   {"zeta", reg.zeta},       {"theta", reg.theta},
                   {"alpha", reg.alpha},     {"theta_threshold", reg.theta_threshold},
                   {"temperature_ok", reg.temperature_ok}, {"theta_ok", reg.theta_ok},
                   {"a", p.a},               {"r", r}};
    w.json_file("response.json", j);

    std::vector<std::string> hdr;
    for (int i = 0; i < d; i++) {
        hdr.push_back("k" + std::to_string(i));
    }
    hdr.push_back("abs_k");
    std::vector<std::string> bh = hdr;
    bh.push_back("b");
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < fit.k.size(); i++) {
        std::vector<double> row(fit.k[i].data(), fit.k[i].data() + d);
        row.push_back(fit.k[i].norm());
        row.push_back(fit.b[i]);
        rows.push_back(row);
    }
    w.csv_file("b_samples.csv", bh, rows);
    std::vector<std::string> eh = hdr;
    eh.push_back("ell");
    rows.clear();
    for (const auto& e : ell) {
        std::vector<double> row(e.k.data(), e.k.data() + d);
        row.push_back(e.k.norm());
        row.push_back(e.ell);
        rows.push_back(row);
    }
    w.csv_file("ell.csv", eh, rows);
    w.field_file("V.dbyf", hc.V);
    for (int i = 0; i < d; i++) {
        w.field_file("rho_prime_" + std::to_string(i) + ".dbyf", hc.rho_prime[i]);
    }
    w.finish(config_hash(c), {{"coefficients", t_coeff}, {"total", seconds_since(t0)}});
    return j;
}

json run_macro(const RunConfig& c)
{
    auto t0 = clock_type::now();
    json dep = require_stage(root_of(c), "response", "macro");
    json resp = read_json(stage_dir(root_of(c), "response") / "response.json");
    const int d = c.d();
    MacroProblem p;
    p.nu = resp.at("regime").at("nu").get<double>();
    p.eps = mat_from_json(resp.at("eps"));
    if (p.eps.rows() != d) {
        throw ConfigError("macro: response bundle has dimension " + std::to_string(p.eps.rows()) +
                          ", config has " + std::to_string(d) + "; rerun response");
    }
    if (!(p.nu > 0)) {
        throw NumericalError("macro: screening parameter nu is not positive; the crystal is not dielectric");
    }
    double ld = max_debye_length(p.nu, p.eps);
    p.box = auto_box(d, p.nu, p.eps, c.macro.box_debye_lengths);
    std::vector<GaussianBump> src;
    for (const auto& s : c.macro.sources) {
        src.push_back({p.box.basis * s.center, s.width * ld, s.charge});
    }
    p.source = gaussian_source(p.box, c.macro.grid, src);
    p.validate();
    PeriodicField psi = solve_pb(p);
    DecayFit fit = debye_observables(p, psi, src.front().center);
    if (!fit.reliable) {
        warn("macro: box spans fewer than 10 Debye lengths; decay rates are unreliable");
    }

    StageWriter w(stage_dir(root_of(c), "macro"), "macro");
    json j;
    j["nu"] = p.nu;
    j["eps"] = mat_json(p.eps);
    j["box"] = mat_json(p.box.basis);
    j["debye_length_max"] = ld;
    j["grid"] = idx_json(c.macro.grid, d);
    j["pb_residual"] = pb_residual(p, psi);
    j["energy_identity_defect"] = energy_identity_defect(p, psi);
    json axes = json::array();
    for (size_t i = 0; i < fit.axes.size(); i++) {
        axes.push_back({{"axis", vec_json(fit.axes[i])},
                        {"rate", fit.rate[i]},
                        {"expected", fit.expected[i]},
                        {"rel_error", fit.rel_error[i]}});
    }
    j["decay"] = {{"axes", axes}, {"box_debye_lengths", fit.box_debye_lengths}, {"reliable", fit.reliable}};
    j["source_integral"] = p.source.integral();
    j["psi_integral"] = psi.integral();
    w.json_file("macro.json", j);
    w.field_file("psi.dbyf", psi);
    w.field_file("source.dbyf", p.source);

    // profile along the first box axis through the first source
    std::vector<std::vector<double>> rows;
    const int n = c.macro.grid[0];
    VecR e0 = p.box.basis.col(0) / n;
    for (int i = 0; i < n; i++) {
        double s = i - n / 2;
        VecR x = src.front().center + s * e0;
        rows.push_back({s * e0.norm(), evaluate_at(psi, x), evaluate_at(p.source, x)});
    }
    w.csv_file("profile.csv", {"distance", "psi", "source"}, rows);
    w.finish(config_hash(c), {{"total", seconds_since(t0)}});
    return j;
}

json run_multiscale(const RunConfig& c)
{
    auto t0 = clock_type::now();
    json dep = require_stage(root_of(c), "crystal", "multiscale");
    CrystalState loaded = load_crystal(c, root_of(c));
    std::vector<int> Ns = supercell_factors(c);
    Index3 kg = multiscale_kgrid(loaded.kgrid.n, c.d(), Ns);
    CrystalState base = kg == loaded.kgrid.n ? loaded : rebuild_crystal(c, loaded.phi, loaded.occ.mu, kg);
    if (!(kg == loaded.kgrid.n)) {
        warn("multiscale: base k-grid refined to a multiple of every supercell factor");
    }
    HomogenizedCoefficients hc = homogenized_coefficients(base);
    const Lattice& lat = base.basis.lattice;
    std::vector<GaussianBump> bumps = cell_bumps(c, lat);

    StageWriter w(stage_dir(root_of(c), "multiscale"), "multiscale");
    json runs = json::array();
    std::vector<double> deltas, rems, leads;
    std::vector<std::vector<double>> rows;
    json timings;
    for (int N : Ns) {
        auto t1 = clock_type::now();
        DeformedCrystal dc = build_deformed_kappa(base, N, bumps, c.multiscale.exponent);
        MicroSolution sol = micro_solve_perturbation(dc, c.multiscale.newton);
        if (!sol.converged) {
            throw NumericalError("multiscale: Newton did not converge at N = " + std::to_string(N));
        }
        MultiscaleReport r = expansion_decompose(dc, sol, hc, c.multiscale.a);
        timings["N" + std::to_string(N)] = seconds_since(t1);
        runs.push_back({{"N", N},
                        {"delta", r.delta},
                        {"nu", r.nu},
                        {"rem_l2", r.rem_l2},
                        {"rem_h1", r.rem_h1},
                        {"rem_delta_norm", r.rem_delta_norm},
                        {"lead_l2", r.lead_l2},
                        {"lead_h1", r.lead_h1},
                        {"zeta", r.zeta},
                        {"a", r.a},
                        {"r", r.r},
                        {"low_share", r.low_share},
                        {"high_share", r.high_share},
                        {"decomposition_defect", r.decomposition_defect},
                        {"phi_only_residual", r.phi_only_residual},
                        {"nonlinearity_l2", r.nonlinearity_l2},
                        {"mean_shift", r.mean_shift},
                        {"charge_defect", sol.charge_defect},
                        {"newton_iterations", r.newton_iterations},
                        {"newton_residuals", r.newton_residuals}});
        rows.push_back({r.delta, r.rem_l2, r.lead_l2, r.rem_h1, r.rem_delta_norm, r.low_share, r.high_share,
                        double(r.newton_iterations)});
        deltas.push_back(r.delta);
        rems.push_back(r.rem_l2);
        leads.push_back(r.lead_l2);
        w.field_file("phi_rem_N" + std::to_string(N) + ".dbyf", r.phi_rem);
        w.field_file("psi_N" + std::to_string(N) + ".dbyf", r.psi);
    }
    json j;
    j["base_kgrid"] = idx_json(kg, c.d());
    j["exponent"] = c.multiscale.exponent;
    j["b0"] = hc.b0;
    j["m"] = hc.m;
    j["eps"] = mat_json(hc.epsilon.eps);
    j["runs"] = runs;
    if (deltas.size() >= 2) {
        j["rem_l2_slope"] = loglog_slope(deltas, rems);
        j["lead_l2_slope"] = loglog_slope(deltas, leads);
    }
    size_t finest = std::min_element(deltas.begin(), deltas.end()) - deltas.begin();
    j["rem_below_lead_at_finest"] = rems[finest] < leads[finest];
    w.json_file("multiscale.json", j);
    w.csv_file("multiscale.csv",
               {"delta", "rem_l2", "lead_l2", "rem_h1", "rem_delta_norm", "low_share", "high_share", "newton_iterations"},
               rows);
    timings["total"] = seconds_since(t0);
    w.finish(config_hash(c), timings);
    return j;
}

json run_bands(const RunConfig& c)
{
    auto t0 = clock_type::now();
    CrystalState st = load_crystal(c, root_of(c));
    const int d = c.d();
    const Lattice& lat = st.basis.lattice;
    int nb = std::min(c.bands.nbands, st.basis.size());
    std::vector<std::vector<double>> rows;
    double s = 0;
    VecR prev;
    const auto& path = c.bands.path;
    for (size_t seg = 0; seg + 1 < path.size(); seg++) {
        int first = seg == 0 ? 0 : 1;
        for (int i = first; i <= c.bands.points; i++) {
            VecR kf = path[seg] + (path[seg + 1] - path[seg]) * (double(i) / c.bands.points);
            VecR kc = lat.kcart(kf);
            if (prev.size()) {
                s += (kc - prev).norm();
            }
            prev = kc;
            FiberEigen e = diagonalize_fiber(assemble_fiber(st.basis, st.phi, kc, false));
            std::vector<double> row{s};
            for (int a = 0; a < d; a++) {
                row.push_back(kf[a]);
            }
            for (int n = 0; n < nb; n++) {
                row.push_back(e.eval[n]);
            }
            rows.push_back(row);
        }
    }
    std::vector<std::string> hdr{"s"};
    for (int a = 0; a < d; a++) {
        hdr.push_back("kfrac" + std::to_string(a));
    }
    for (int n = 0; n < nb; n++) {
        hdr.push_back("e" + std::to_string(n));
    }
    StageWriter w(stage_dir(root_of(c), "bands"), "bands");
    json vertices = json::array();
    for (const auto& v : path) {
        vertices.push_back(vec_json(v));
    }
    json j{{"mu", st.occ.mu}, {"gap", gap_json(st.gap)}, {"nbands", nb}, {"path", vertices},
           {"points_per_segment", c.bands.points}};
    w.json_file("bands.json", j);
    w.csv_file("bands.csv", hdr, rows);
    w.finish(config_hash(c), {{"total", seconds_since(t0)}});
    return j;
}

} // namespace

const char* stage_name(Stage s)
{
    switch (s) {
    case Stage::crystal:
        return "crystal";
    case Stage::response:
        return "response";
    case Stage::macro:
        return "macro";
    case Stage::multiscale:
        return "multiscale";
    case Stage::bands:
        return "bands";
    }
    return "";
}

Stage stage_from_name(const std::string& name)
{
    for (Stage s : {Stage::crystal, Stage::response, Stage::macro, Stage::multiscale, Stage::bands}) {
        if (name == stage_name(s)) {
            return s;
        }
    }
    throw ConfigError("unknown stage \"" + name + "\"");
}

std::vector<Stage> stage_dependencies(Stage s)
{
    switch (s) {
    case Stage::crystal:
        return {};
    case Stage::response:
    case Stage::multiscale:
    case Stage::bands:
        return {Stage::crystal};
    case Stage::macro:
        return {Stage::crystal, Stage::response};
    }
    return {};
}

std::string crystal_key(const RunConfig& c)
{
    json j = to_json(c);
    json k;
    for (const char* key : {"lattice", "crystal", "ecut", "kgrid", "temperature", "mu", "scf"}) {
        k[key] = j[key];
    }
    if (c.field.family == "file") {
        k["field_sha256"] = sha256_file(c.field.file);
    }
    return sha256_hex(k.dump());
}

CrystalState build_crystal(const RunConfig& c)
{
    Lattice lat = c.lattice();
    PlaneWaveBasis pw(lat, c.ecut);
    KGrid kg(lat, c.kgrid);
    PeriodicField f = build_field(c, lat, pw.fft_grid);
    if (c.mode == CrystalMode::scf) {
        if (!(f.mean() > 0)) {
            throw ConfigError("crystal.field: kappa must have a positive mean in scf mode");
        }
        return scf_solve(pw, f, c.scf, c.T, kg);
    }
    double mu = c.mu;
    if (c.mu_choice == MuChoice::gap_center) {
        mu = gap_center(compute_bands(pw, f, kg), c.gap_index);
    } else if (c.mu_choice == MuChoice::fixed_charge) {
        mu = solve_chemical_potential(pw, f, c.T, c.target_charge, kg);
    }
    return construct_dielectric_kappa(pw, f, {c.T, mu}, kg);
}

CrystalState rebuild_crystal(const RunConfig& c, const PeriodicField& phi, double mu, const Index3& kgrid)
{
    Lattice lat = c.lattice();
    PlaneWaveBasis pw(lat, c.ecut);
    KGrid kg(lat, kgrid);
    return construct_dielectric_kappa(pw, phi.regrid(pw.fft_grid), {c.T, mu}, kg);
}

CrystalState load_crystal(const RunConfig& c, const fs::path& root)
{
    require_stage(root, "crystal", "this stage");
    fs::path dir = stage_dir(root, "crystal");
    json j = read_json(dir / "crystal.json");
    if (j.value("crystal_key", "") != crystal_key(c)) {
        throw ConfigError("the crystal bundle in " + dir.string() +
                          " was produced by a different crystal configuration; rerun `debye-forge crystal`");
    }
    auto bad = verify_manifest(dir);
    if (!bad.empty()) {
        throw ConfigError("crystal bundle is corrupt (hash mismatch for " + bad.front() + "); rerun `debye-forge crystal`");
    }
    PeriodicField phi = read_dbyf(dir / "phi.dbyf");
    return rebuild_crystal(c, phi, j.at("mu").get<double>(), c.kgrid);
}

Index3 multiscale_kgrid(const Index3& kgrid, int d, const std::vector<int>& Ns)
{
    Index3 out = kgrid;
    for (int i = 0; i < d; i++) {
        int l = 1;
        for (int N : Ns) {
            l = std::lcm(l, N);
        }
        out[i] = std::lcm(kgrid[i], l);
    }
    return out;
}

json run_stage(const RunConfig& c, Stage s)
{
    clear_warnings();
    for (Stage dep : stage_dependencies(s)) {
        if (dep == Stage::crystal && s == Stage::macro) {
            continue; // reached through the response bundle
        }
        require_stage(root_of(c), stage_name(dep), stage_name(s));
    }
    switch (s) {
    case Stage::crystal:
        return run_crystal(c);
    case Stage::response:
        return run_response(c);
    case Stage::macro:
        return run_macro(c);
    case Stage::multiscale:
        return run_multiscale(c);
    case Stage::bands:
        return run_bands(c);
    }
    return {};
}

json run_pipeline(const RunConfig& c, const std::vector<Stage>& stages, bool with_deps)
{
    std::vector<Stage> order;
    auto want = [&](Stage s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
    auto missing = [&](Stage s) { return !fs::exists(stage_dir(root_of(c), stage_name(s)) / "manifest.json"); };
    for (Stage s : {Stage::crystal, Stage::response, Stage::macro, Stage::multiscale, Stage::bands}) {
        bool needed = false;
        if (with_deps) {
            for (Stage t : stages) {
                auto deps = stage_dependencies(t);
                if (std::find(deps.begin(), deps.end(), s) != deps.end() && missing(s)) {
                    needed = true;
                }
            }
        }
        if (want(s) || needed) {
            order.push_back(s);
        }
    }
    json out;
    for (Stage s : order) {
        out[stage_name(s)] = run_stage(c, s);
    }
    return out;
}

} // namespace debye
