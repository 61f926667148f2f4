// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

#include "debye/config.hpp"

#include "debye/errors.hpp"
#include "debye/io.hpp"
#include "debye/log.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace debye {

namespace {

/// Schema walker that records every violation instead of stopping at the first.
class Reader
{
  public:
    explicit Reader(bool lax)
        : lax_(lax)
    {
    }

    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& msg)
    {
        errors.push_back(path + ": " + msg);
    }

    bool object(const json& j, const std::string& path)
    {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        return true;
    }

    void keys(const json& j, const std::string& path, std::initializer_list<const char*> known)
    {
        std::set<std::string> k(known.begin(), known.end());
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!k.count(it.key())) {
                if (lax_) {
                    warn("config: ignoring unknown key " + path + "." + it.key());
                } else {
                    fail(path + "." + it.key(), "unknown key");
                }
            }
        }
    }

    bool number(const json& j, const char* key, const std::string& path, double& out)
    {
        if (!j.contains(key)) {
            return false;
        }
        const json& v = j.at(key);
        if (!v.is_number()) {
            fail(path + "." + key, "expected a number");
            return false;
        }
        out = v.get<double>();
        if (!std::isfinite(out)) {
            fail(path + "." + key, "must be finite");
            return false;
        }
        return true;
    }

    bool integer(const json& j, const char* key, const std::string& path, int& out)
    {
        if (!j.contains(key)) {
            return false;
        }
        const json& v = j.at(key);
        if (!v.is_number_integer()) {
            fail(path + "." + key, "expected an integer");
            return false;
        }
        out = v.get<int>();
        return true;
    }

    bool boolean(const json& j, const char* key, const std::string& path, bool& out)
    {
        if (!j.contains(key)) {
            return false;
        }
        if (!j.at(key).is_boolean()) {
            fail(path + "." + key, "expected true or false");
            return false;
        }
        out = j.at(key).get<bool>();
        return true;
    }

    bool string(const json& j, const char* key, const std::string& path, std::string& out)
    {
        if (!j.contains(key)) {
            return false;
        }
        if (!j.at(key).is_string()) {
            fail(path + "." + key, "expected a string");
            return false;
        }
        out = j.at(key).get<std::string>();
        return true;
    }

    bool choice(const json& j, const char* key, const std::string& path, std::string& out,
                std::initializer_list<const char*> allowed)
    {
        if (!string(j, key, path, out)) {
            return false;
        }
        for (const char* a : allowed) {
            if (out == a) {
                return true;
            }
        }
        std::string list;
        for (const char* a : allowed) {
            list += (list.empty() ? "" : ", ") + std::string(a);
        }
        fail(path + "." + key, "must be one of " + list + " (got \"" + out + "\")");
        return false;
    }

    bool vector(const json& v, const std::string& path, int d, VecR& out)
    {
        if (!v.is_array() || static_cast<int>(v.size()) != d) {
            fail(path, "expected an array of " + std::to_string(d) + " numbers");
            return false;
        }
        out.resize(d);
        for (int i = 0; i < d; i++) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
                fail(path, "expected an array of " + std::to_string(d) + " numbers");
                return false;
            }
            out[i] = v[i].get<double>();
        }
        return true;
    }

    bool index3(const json& v, const std::string& path, int d, Index3& out, int fill)
    {
        if (!v.is_array() || static_cast<int>(v.size()) != d) {
            fail(path, "expected an array of " + std::to_string(d) + " integers");
            return false;
        }
        out = {fill, fill, fill};
        for (int i = 0; i < d; i++) {
            if (!v[i].is_number_integer()) {
                fail(path, "expected an array of " + std::to_string(d) + " integers");
                return false;
            }
            out[i] = v[i].get<int>();
        }
        return true;
    }

    void positive(double v, const std::string& path)
    {
        if (!(v > 0)) {
            fail(path, "must be > 0 (got " + fmt(v) + ")");
        }
    }

    void at_least(int v, int lo, const std::string& path)
    {
        if (v < lo) {
            fail(path, "must be >= " + std::to_string(lo) + " (got " + std::to_string(v) + ")");
        }
    }

    static std::string fmt(double v)
    {
        std::ostringstream os;
        os << v;
        return os.str();
    }

  private:
    bool lax_;
};

std::string route_name(Route r)
{
    return r == Route::eigen ? "eigen" : "contour";
}

VecR default_center(int d, double first)
{
    VecR c = VecR::Constant(d, 0.5);
    c[0] = first;
    return c;
}

json vec_json(const VecR& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); i++) {
        a.push_back(v[i]);
    }
    return a;
}

json idx_json(const Index3& v, int d)
{
    json a = json::array();
    for (int i = 0; i < d; i++) {
        a.push_back(v[i]);
    }
    return a;
}

void read_bumps(Reader& r, const json& arr, const std::string& path, int d, std::vector<GaussianBump>& out)
{
    if (!arr.is_array()) {
        r.fail(path, "expected an array of bumps");
        return;
    }
    out.clear();
    for (size_t i = 0; i < arr.size(); i++) {
        std::string p = path + "[" + std::to_string(i) + "]";
        const json& b = arr[i];
        if (!r.object(b, p)) {
            continue;
        }
        r.keys(b, p, {"center", "width", "charge"});
        GaussianBump g;
        g.center = VecR::Constant(d, 0.5);
        if (b.contains("center")) {
            r.vector(b.at("center"), p + ".center", d, g.center);
        }
        r.number(b, "width", p, g.width);
        r.number(b, "charge", p, g.charge);
        r.positive(g.width, p + ".width");
        out.push_back(g);
    }
}

json bumps_json(const std::vector<GaussianBump>& bs)
{
    json a = json::array();
    for (const auto& b : bs) {
        a.push_back({{"center", vec_json(b.center)}, {"width", b.width}, {"charge", b.charge}});
    }
    return a;
}

void read_field(Reader& r, const json& f, const std::string& path, int d, FieldSpec& out)
{
    if (!r.object(f, path)) {
        return;
    }
    r.keys(f, path, {"family", "terms", "bumps", "offset", "path"});
    if (!f.contains("family")) {
        r.fail(path + ".family", "required (cosine, gaussian or file)");
        return;
    }
    r.choice(f, "family", path, out.family, {"cosine", "gaussian", "file"});
    r.number(f, "offset", path, out.offset);
    if (out.family == "cosine") {
        if (!f.contains("terms") || !f.at("terms").is_array() || f.at("terms").empty()) {
            r.fail(path + ".terms", "cosine family needs a non-empty array of terms");
            return;
        }
        const json& terms = f.at("terms");
        for (size_t i = 0; i < terms.size(); i++) {
            std::string p = path + ".terms[" + std::to_string(i) + "]";
            if (!r.object(terms[i], p)) {
                continue;
            }
            r.keys(terms[i], p, {"miller", "amplitude", "phase"});
            CosineTerm t;
            if (!terms[i].contains("miller")) {
                r.fail(p + ".miller", "required");
            } else if (r.index3(terms[i].at("miller"), p + ".miller", d, t.miller, 0) &&
                       t.miller == Index3{0, 0, 0}) {
                r.fail(p + ".miller", "must be nonzero (use offset for the constant)");
            }
            r.number(terms[i], "amplitude", p, t.amplitude);
            r.number(terms[i], "phase", p, t.phase);
            out.cosine.push_back(t);
        }
    } else if (out.family == "gaussian") {
        if (!f.contains("bumps")) {
            r.fail(path + ".bumps", "gaussian family needs bumps");
            return;
        }
        read_bumps(r, f.at("bumps"), path + ".bumps", d, out.gaussian);
        if (out.gaussian.empty()) {
            r.fail(path + ".bumps", "must not be empty");
        }
    } else if (out.family == "file") {
        if (!r.string(f, "path", path, out.file) || out.file.empty()) {
            r.fail(path + ".path", "file family needs a DBYF path");
        }
    }
}

json field_json(const FieldSpec& f, int d)
{
    json j{{"family", f.family}, {"offset", f.offset}};
    if (f.family == "cosine") {
        json a = json::array();
        for (const auto& t : f.cosine) {
            a.push_back({{"miller", idx_json(t.miller, d)}, {"amplitude", t.amplitude}, {"phase", t.phase}});
        }
        j["terms"] = a;
    } else if (f.family == "gaussian") {
        j["bumps"] = bumps_json(f.gaussian);
    } else {
        j["path"] = f.file;
    }
    return j;
}

} // namespace

RunConfig parse_config(const json& j, bool lax)
{
    Reader r(lax);
    RunConfig c;
    if (!r.object(j, "config")) {
        throw ConfigError("config: expected a JSON object");
    }
    r.keys(j, "config", {"lattice", "crystal", "ecut", "kgrid", "temperature", "mu", "scf", "response", "macro",
                         "multiscale", "bands", "output", "seed"});

    // lattice
    int d = 1;
    bool have_lattice = false;
    if (!j.contains("lattice")) {
        r.fail("lattice", "required");
    } else if (r.object(j.at("lattice"), "lattice")) {
        const json& l = j.at("lattice");
        r.keys(l, "lattice", {"basis"});
        const json* b = l.contains("basis") ? &l.at("basis") : nullptr;
        if (!b || !b->is_array() || b->empty() || b->size() > 3) {
            r.fail("lattice.basis", "expected 1 to 3 lattice vectors");
        } else {
            d = static_cast<int>(b->size());
            c.basis = MatR::Zero(d, d);
            bool ok = true;
            for (int i = 0; i < d; i++) {
                VecR v;
                if (r.vector((*b)[i], "lattice.basis[" + std::to_string(i) + "]", d, v)) {
                    c.basis.col(i) = v;
                } else {
                    ok = false;
                }
            }
            if (ok) {
                try {
                    Lattice lat(c.basis);
                    have_lattice = true;
                } catch (const ConfigError& e) {
                    r.fail("lattice.basis", e.what());
                }
            }
        }
    }
    if (c.basis.size() == 0) {
        c.basis = MatR::Constant(1, 1, 2 * pi);
    }

    // crystal
    if (!j.contains("crystal")) {
        r.fail("crystal", "required");
    } else if (r.object(j.at("crystal"), "crystal")) {
        const json& cr = j.at("crystal");
        r.keys(cr, "crystal", {"mode", "field"});
        std::string mode = "construct";
        r.choice(cr, "mode", "crystal", mode, {"construct", "scf"});
        c.mode = mode == "scf" ? CrystalMode::scf : CrystalMode::construct;
        if (!cr.contains("field")) {
            r.fail("crystal.field", "required");
        } else {
            read_field(r, cr.at("field"), "crystal.field", d, c.field);
        }
    }

    r.number(j, "ecut", "config", c.ecut);
    r.positive(c.ecut, "ecut");
    c.kgrid = {1, 1, 1};
    c.kgrid[0] = 16;
    for (int i = 1; i < d; i++) {
        c.kgrid[i] = 16;
    }
    if (j.contains("kgrid") && r.index3(j.at("kgrid"), "kgrid", d, c.kgrid, 1)) {
        for (int i = 0; i < d; i++) {
            r.at_least(c.kgrid[i], 1, "kgrid[" + std::to_string(i) + "]");
        }
    }

    // temperature
    if (j.contains("temperature") && r.object(j.at("temperature"), "temperature")) {
        const json& t = j.at("temperature");
        r.keys(t, "temperature", {"T", "beta"});
        double T = 0, beta = 0;
        bool hT = r.number(t, "T", "temperature", T);
        bool hb = r.number(t, "beta", "temperature", beta);
        if (hT && hb) {
            r.fail("temperature", "give T or beta, not both");
        } else if (hT) {
            r.positive(T, "temperature.T");
            c.T = T;
        } else if (hb) {
            r.positive(beta, "temperature.beta");
            c.T = beta > 0 ? 1 / beta : beta;
        } else {
            r.fail("temperature", "needs T or beta");
        }
    }

    // chemical potential
    c.mu_choice = c.mode == CrystalMode::scf ? MuChoice::fixed_charge : MuChoice::gap_center;
    c.target_charge = std::numeric_limits<double>::quiet_NaN();
    if (j.contains("mu") && r.object(j.at("mu"), "mu")) {
        const json& m = j.at("mu");
        r.keys(m, "mu", {"mode", "gap_index", "value", "charge"});
        std::string mode = c.mode == CrystalMode::scf ? "fixed_charge" : "gap_center";
        r.choice(m, "mode", "mu", mode, {"gap_center", "fixed", "fixed_charge"});
        if (mode == "gap_center") {
            c.mu_choice = MuChoice::gap_center;
            r.integer(m, "gap_index", "mu", c.gap_index);
            r.at_least(c.gap_index, 1, "mu.gap_index");
            if (c.mode == CrystalMode::scf) {
                r.fail("mu.mode", "gap_center needs crystal.mode construct");
            }
        } else if (mode == "fixed") {
            c.mu_choice = MuChoice::fixed;
            if (!r.number(m, "value", "mu", c.mu)) {
                r.fail("mu.value", "required for mode fixed");
            }
        } else {
            c.mu_choice = MuChoice::fixed_charge;
            if (r.number(m, "charge", "mu", c.target_charge)) {
                r.positive(c.target_charge, "mu.charge");
            }
        }
    }
    if (c.mode == CrystalMode::construct && c.mu_choice == MuChoice::fixed_charge && std::isnan(c.target_charge)) {
        r.fail("mu.charge", "required for mode fixed_charge when crystal.mode is construct");
    }

    // scf
    if (j.contains("scf") && r.object(j.at("scf"), "scf")) {
        const json& s = j.at("scf");
        r.keys(s, "scf", {"mixing", "anderson_depth", "tol", "max_iter"});
        r.number(s, "mixing", "scf", c.scf.mixing);
        r.integer(s, "anderson_depth", "scf", c.scf.anderson_depth);
        r.number(s, "tol", "scf", c.scf.tol_residual);
        r.integer(s, "max_iter", "scf", c.scf.max_iter);
    }
    if (!(c.scf.mixing > 0 && c.scf.mixing <= 1)) {
        r.fail("scf.mixing", "must lie in (0, 1] (got " + Reader::fmt(c.scf.mixing) + ")");
    }
    r.at_least(c.scf.anderson_depth, 0, "scf.anderson_depth");
    r.positive(c.scf.tol_residual, "scf.tol");
    r.at_least(c.scf.max_iter, 1, "scf.max_iter");
    c.scf.mu_mode = c.mu_choice == MuChoice::fixed ? MuMode::fixed_mu : MuMode::fixed_charge;
    c.scf.mu = c.mu;
    c.scf.target_charge = c.target_charge;

    // response
    if (j.contains("response") && r.object(j.at("response"), "response")) {
        const json& s = j.at("response");
        r.keys(s, "response", {"route", "delta", "a", "k_samples", "kmax", "fit_degree", "alpha", "theta_threshold"});
        std::string route = "eigen";
        if (r.choice(s, "route", "response", route, {"eigen", "contour"})) {
            c.response.route = route == "eigen" ? Route::eigen : Route::contour;
        }
        r.number(s, "delta", "response", c.response.delta);
        r.number(s, "a", "response", c.response.a);
        r.integer(s, "k_samples", "response", c.response.k_samples);
        r.number(s, "kmax", "response", c.response.kmax);
        r.integer(s, "fit_degree", "response", c.response.fit_degree);
        r.number(s, "alpha", "response", c.response.alpha);
        r.number(s, "theta_threshold", "response", c.response.theta_threshold);
    }
    if (!(c.response.delta > 0 && c.response.delta <= 1)) {
        r.fail("response.delta", "must lie in (0, 1] (got " + Reader::fmt(c.response.delta) + ")");
    }
    r.positive(c.response.a, "response.a");
    r.at_least(c.response.k_samples, 12, "response.k_samples");
    r.positive(c.response.kmax, "response.kmax");
    if (c.response.fit_degree != 4 && c.response.fit_degree != 6) {
        r.fail("response.fit_degree", "must be 4 or 6");
    }
    r.positive(c.response.alpha, "response.alpha");
    r.positive(c.response.theta_threshold, "response.theta_threshold");

    // macro
    c.macro.grid = {1, 1, 1};
    for (int i = 0; i < d; i++) {
        c.macro.grid[i] = d == 1 ? 4096 : d == 2 ? 256 : 64;
    }
    if (j.contains("macro") && r.object(j.at("macro"), "macro")) {
        const json& s = j.at("macro");
        r.keys(s, "macro", {"box_debye_lengths", "grid", "sources"});
        r.number(s, "box_debye_lengths", "macro", c.macro.box_debye_lengths);
        if (s.contains("grid") && r.index3(s.at("grid"), "macro.grid", d, c.macro.grid, 1)) {
            for (int i = 0; i < d; i++) {
                r.at_least(c.macro.grid[i], 8, "macro.grid[" + std::to_string(i) + "]");
            }
        }
        if (s.contains("sources")) {
            std::vector<GaussianBump> bs;
            read_bumps(r, s.at("sources"), "macro.sources", d, bs);
            for (const auto& b : bs) {
                c.macro.sources.push_back({b.center, b.width, b.charge});
            }
        }
    }
    r.positive(c.macro.box_debye_lengths, "macro.box_debye_lengths");
    if (c.macro.sources.empty()) {
        c.macro.sources.push_back({VecR::Constant(d, 0.5), 0.02, 1.0});
    }

    // multiscale
    c.multiscale.bumps = {{default_center(d, 0.25), 0.5, 0.1}, {default_center(d, 0.75), 0.5, -0.1}};
    if (j.contains("multiscale") && r.object(j.at("multiscale"), "multiscale")) {
        const json& s = j.at("multiscale");
        r.keys(s, "multiscale", {"deltas", "exponent", "a", "bumps", "newton"});
        if (s.contains("deltas")) {
            const json& ds = s.at("deltas");
            if (!ds.is_array() || ds.empty()) {
                r.fail("multiscale.deltas", "expected a non-empty array of numbers");
            } else {
                c.multiscale.deltas.clear();
                for (size_t i = 0; i < ds.size(); i++) {
                    std::string p = "multiscale.deltas[" + std::to_string(i) + "]";
                    if (!ds[i].is_number()) {
                        r.fail(p, "expected a number");
                        continue;
                    }
                    double dl = ds[i].get<double>();
                    double n = dl > 0 ? 1 / dl : 0;
                    if (!(dl > 0 && dl <= 1) || std::abs(n - std::round(n)) > 1e-9 * n) {
                        r.fail(p, "must be 1 / N for an integer N >= 1 (got " + Reader::fmt(dl) + ")");
                    }
                    c.multiscale.deltas.push_back(dl);
                }
            }
        }
        r.number(s, "exponent", "multiscale", c.multiscale.exponent);
        r.number(s, "a", "multiscale", c.multiscale.a);
        if (s.contains("bumps")) {
            read_bumps(r, s.at("bumps"), "multiscale.bumps", d, c.multiscale.bumps);
        }
        if (s.contains("newton") && r.object(s.at("newton"), "multiscale.newton")) {
            const json& nw = s.at("newton");
            r.keys(nw, "multiscale.newton", {"max_iter", "tol", "relinearize", "min_step"});
            r.integer(nw, "max_iter", "multiscale.newton", c.multiscale.newton.max_iter);
            r.number(nw, "tol", "multiscale.newton", c.multiscale.newton.tol);
            r.boolean(nw, "relinearize", "multiscale.newton", c.multiscale.newton.relinearize);
            r.number(nw, "min_step", "multiscale.newton", c.multiscale.newton.min_step);
        }
    }
    r.positive(c.multiscale.exponent, "multiscale.exponent");
    r.positive(c.multiscale.a, "multiscale.a");
    r.at_least(c.multiscale.newton.max_iter, 1, "multiscale.newton.max_iter");
    r.positive(c.multiscale.newton.tol, "multiscale.newton.tol");
    r.positive(c.multiscale.newton.min_step, "multiscale.newton.min_step");

    // bands
    if (d == 1) {
        c.bands.path = {VecR::Constant(1, -0.5), VecR::Zero(1), VecR::Constant(1, 0.5)};
    } else {
        VecR x = VecR::Zero(d), m = VecR::Constant(d, 0.5);
        x[0] = 0.5;
        c.bands.path = {VecR::Zero(d), x, m, VecR::Zero(d)};
    }
    if (j.contains("bands") && r.object(j.at("bands"), "bands")) {
        const json& s = j.at("bands");
        r.keys(s, "bands", {"path", "points", "nbands"});
        if (s.contains("path")) {
            const json& p = s.at("path");
            if (!p.is_array() || p.size() < 2) {
                r.fail("bands.path", "expected at least two fractional k-points");
            } else {
                c.bands.path.clear();
                for (size_t i = 0; i < p.size(); i++) {
                    VecR v;
                    if (r.vector(p[i], "bands.path[" + std::to_string(i) + "]", d, v)) {
                        c.bands.path.push_back(v);
                    }
                }
            }
        }
        r.integer(s, "points", "bands", c.bands.points);
        r.integer(s, "nbands", "bands", c.bands.nbands);
    }
    r.at_least(c.bands.points, 1, "bands.points");
    r.at_least(c.bands.nbands, 1, "bands.nbands");

    r.string(j, "output", "config", c.output);
    if (c.output.empty()) {
        r.fail("output", "must not be empty");
    }
    if (j.contains("seed")) {
        const json& s = j.at("seed");
        if (!s.is_number_integer() || s.get<long long>() < 0) {
            r.fail("seed", "expected a non-negative integer");
        } else {
            c.seed = s.get<unsigned>();
        }
    }
    (void)have_lattice;

    if (!r.errors.empty()) {
        std::string msg = "invalid configuration (" + std::to_string(r.errors.size()) + " problem" +
                          (r.errors.size() > 1 ? "s" : "") + "):";
        for (const auto& e : r.errors) {
            msg += "\n  " + e;
        }
        throw ConfigError(msg);
    }
    return c;
}

RunConfig parse_config_file(const std::string& path, bool lax)
{
    std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": not valid JSON: " + e.what());
    }
    return parse_config(j, lax);
}

json to_json(const RunConfig& c)
{
    const int d = c.d();
    json j;
    json basis = json::array();
    for (int i = 0; i < d; i++) {
        basis.push_back(vec_json(c.basis.col(i)));
    }
    j["lattice"] = {{"basis", basis}};
    j["crystal"] = {{"mode", c.mode == CrystalMode::scf ? "scf" : "construct"}, {"field", field_json(c.field, d)}};
    j["ecut"] = c.ecut;
    j["kgrid"] = idx_json(c.kgrid, d);
    j["temperature"] = {{"T", c.T}};
    switch (c.mu_choice) {
    case MuChoice::gap_center:
        j["mu"] = {{"mode", "gap_center"}, {"gap_index", c.gap_index}};
        break;
    case MuChoice::fixed:
        j["mu"] = {{"mode", "fixed"}, {"value", c.mu}};
        break;
    case MuChoice::fixed_charge:
        j["mu"] = {{"mode", "fixed_charge"}};
        if (!std::isnan(c.target_charge)) {
            j["mu"]["charge"] = c.target_charge;
        }
        break;
    }
    j["scf"] = {{"mixing", c.scf.mixing},
                {"anderson_depth", c.scf.anderson_depth},
                {"tol", c.scf.tol_residual},
                {"max_iter", c.scf.max_iter}};
    j["response"] = {{"route", route_name(c.response.route)}, {"delta", c.response.delta},
                     {"a", c.response.a},                     {"k_samples", c.response.k_samples},
                     {"kmax", c.response.kmax},               {"fit_degree", c.response.fit_degree},
                     {"alpha", c.response.alpha},             {"theta_threshold", c.response.theta_threshold}};
    json src = json::array();
    for (const auto& s : c.macro.sources) {
        src.push_back({{"center", vec_json(s.center)}, {"width", s.width}, {"charge", s.charge}});
    }
    j["macro"] = {{"box_debye_lengths", c.macro.box_debye_lengths},
                  {"grid", idx_json(c.macro.grid, d)},
                  {"sources", src}};
    j["multiscale"] = {{"deltas", c.multiscale.deltas},
                       {"exponent", c.multiscale.exponent},
                       {"a", c.multiscale.a},
                       {"bumps", bumps_json(c.multiscale.bumps)},
                       {"newton",
                        {{"max_iter", c.multiscale.newton.max_iter},
                         {"tol", c.multiscale.newton.tol},
                         {"relinearize", c.multiscale.newton.relinearize},
                         {"min_step", c.multiscale.newton.min_step}}}};
    json path = json::array();
    for (const auto& p : c.bands.path) {
        path.push_back(vec_json(p));
    }
    j["bands"] = {{"path", path}, {"points", c.bands.points}, {"nbands", c.bands.nbands}};
    j["output"] = c.output;
    j["seed"] = c.seed;
    return j;
}

std::string config_hash(const RunConfig& c)
{
    json j = to_json(c);
    j.erase("output");
    return sha256_hex(j.dump());
}

PeriodicField build_field(const RunConfig& c, const Lattice& lat, const Index3& grid)
{
    const FieldSpec& s = c.field;
    PeriodicField f(lat, grid, true);
    if (s.family == "cosine") {
        for (const auto& t : s.cosine) {
            Index3 neg{-t.miller[0], -t.miller[1], -t.miller[2]};
            cplx a = t.amplitude * std::exp(cplx(0, t.phase));
            f.set_coeff(t.miller, f.coeff(t.miller) + a);
            f.set_coeff(neg, f.coeff(neg) + std::conj(a));
        }
    } else if (s.family == "gaussian") {
        std::vector<GaussianBump> bs = s.gaussian;
        for (auto& b : bs) {
            b.center = lat.basis * b.center;
        }
        f = gaussian_source(lat, grid, bs);
    } else {
        PeriodicField g = read_dbyf(s.file);
        if (g.lattice.d != lat.d || (g.lattice.basis - lat.basis).cwiseAbs().maxCoeff() > 1e-12 * lat.basis.norm()) {
            throw ConfigError("crystal.field.path: " + s.file + " is on a different lattice");
        }
        f = g.regrid(grid);
        f.make_real();
    }
    f.coeffs[0] += s.offset;
    return f;
}

} // namespace debye
