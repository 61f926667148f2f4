// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file test_cli_io.cpp
 *  \brief cli-io: config schema, DBYF and CSV files, hashes, stage bundles and the CLI exit codes.
 */

#include "doctest.h"
#include "test_util.hpp"

#include "debye/errors.hpp"
#include "debye/log.hpp"
#include "debye/pipeline.hpp"

#include <cstdlib>
#include <cstring>
#include <set>
#include <sstream>
#include <random>
#include <sys/wait.h>
#include <unistd.h>

using namespace debye;
using debye::test::line;
using debye::test::mathieu_crystal;
using debye::test::random_field;
using nlohmann::json;

namespace {

json minimal_1d()
{
    return json::parse(R"({
        "lattice": {"basis": [[6.283185307179586]]},
        "crystal": {"field": {"family": "cosine", "terms": [{"miller": [1], "amplitude": 1.0}]}}
    })");
}

/// Small Mathieu run writing into a fresh temporary directory.
RunConfig small_config(const std::string& tag)
{
    json j = minimal_1d();
    j["ecut"] = 50;
    j["kgrid"] = {8};
    j["temperature"] = {{"beta", 40}};
    j["response"] = {{"k_samples", 12}};
    j["macro"] = {{"grid", {1024}}};
    j["multiscale"] = {{"deltas", {0.5, 0.25}}};
    j["bands"] = {{"points", 8}, {"nbands", 4}};
    fs::path dir = fs::temp_directory_path() / ("debye-forge-test-" + std::to_string(getpid()) + "-" + tag);
    fs::remove_all(dir);
    j["output"] = dir.string();
    return parse_config(j);
}

std::string error_of(const json& j, bool lax = false)
{
    try {
        parse_config(j, lax);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

/// Every JSON and CSV file of a bundle except the manifest, by name.
std::map<std::string, std::string> text_outputs(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string ext = e.path().extension().string();
        if ((ext == ".json" || ext == ".csv") && e.path().filename() != "manifest.json") {
            out[e.path().filename().string()] = read_file(e.path());
        }
    }
    return out;
}

int run_cli(const std::string& args, const std::string& env = "")
{
    std::string cmd = env + " " + DEBYE_FORGE_BIN + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

// ---------------------------------------------------------------------------
// config

TEST_CASE("parse_config: minimal 1D config gets defaults filled in and echoed")
{
    RunConfig c = parse_config(minimal_1d());
    CHECK(c.d() == 1);
    CHECK(c.ecut == 200);
    CHECK(c.kgrid[0] == 16);
    CHECK(c.T == 0.025);
    CHECK(c.mu_choice == MuChoice::gap_center);
    CHECK(c.scf.tol_residual == 1e-10);
    json e = to_json(c);
    CHECK(e["ecut"] == 200);
    CHECK(e["scf"]["tol"] == 1e-10);
    CHECK(e["mu"]["mode"] == "gap_center");
    CHECK(e["multiscale"]["deltas"].size() == 3);
    CHECK(e["macro"]["sources"].size() == 1);
}

TEST_CASE("parse_config: negative T is an error naming the field")
{
    json j = minimal_1d();
    j["temperature"] = {{"T", -0.1}};
    std::string msg = error_of(j);
    CHECK(msg.find("temperature.T") != std::string::npos);
    CHECK(msg.find("> 0") != std::string::npos);
}

TEST_CASE("parse_config: every violation is reported, not just the first")
{
    json j = minimal_1d();
    j["ecut"] = -1;
    j["kgrid"] = {0};
    j["temperature"] = {{"T", 0.1}, {"beta", 10}};
    j["scf"] = {{"mixing", 1.5}};
    j["multiscale"] = {{"deltas", {0.3}}};
    j["colour"] = "blue";
    std::string msg = error_of(j);
    for (const char* field : {"ecut", "kgrid[0]", "temperature", "scf.mixing", "multiscale.deltas[0]", "config.colour"}) {
        CHECK_MESSAGE(msg.find(field) != std::string::npos, field);
    }
    CHECK(msg.find("6 problems") != std::string::npos);
}

TEST_CASE("parse_config: unknown keys are rejected unless lax")
{
    json j = minimal_1d();
    j["scf"] = {{"tolerance", 1e-8}};
    CHECK(error_of(j).find("scf.tolerance: unknown key") != std::string::npos);
    set_quiet(true);
    clear_warnings();
    CHECK(error_of(j, true).empty());
    CHECK(recorded_warnings().size() == 1);
    set_quiet(false);
}

TEST_CASE("parse_config: missing required sections and wrong types")
{
    CHECK(error_of(json::object()).find("lattice: required") != std::string::npos);
    CHECK(error_of(json::object()).find("crystal: required") != std::string::npos);
    json j = minimal_1d();
    j["lattice"]["basis"] = {{1.0, 0.0}, {2.0, 0.0}};
    CHECK(error_of(j).find("lattice.basis") != std::string::npos);
    j = minimal_1d();
    j["ecut"] = "high";
    CHECK(error_of(j).find("ecut: expected a number") != std::string::npos);
    j = minimal_1d();
    j["crystal"]["mode"] = "scf";
    j["mu"] = {{"mode", "gap_center"}};
    CHECK(error_of(j).find("mu.mode") != std::string::npos);
}

TEST_CASE("parse_config: parse -> serialize -> parse is the identity on random valid configs")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    for (int trial = 0; trial < 20; trial++) {
        json j = minimal_1d();
        j["ecut"] = 10 + 100 * u(rng);
        j["kgrid"] = {1 + int(8 * u(rng))};
        if (trial % 2) {
            j["temperature"] = {{"beta", 10 * u(rng)}};
        } else {
            j["temperature"] = {{"T", u(rng)}};
        }
        if (trial % 3 == 1) {
            j["mu"] = {{"mode", "fixed"}, {"value", u(rng) - 1}};
        } else if (trial % 3 == 2) {
            j["mu"] = {{"mode", "fixed_charge"}, {"charge", u(rng)}};
        }
        j["crystal"]["field"]["terms"][0]["phase"] = u(rng);
        j["response"] = {{"route", trial % 2 ? "contour" : "eigen"}, {"kmax", 0.05 * u(rng)}};
        j["multiscale"] = {{"deltas", {1.0 / (1 + trial % 5)}}, {"exponent", 1 + u(rng)}};
        j["macro"] = {{"sources", {{{"center", {u(rng) / 2}}, {"width", u(rng) / 10}, {"charge", u(rng)}}}}};
        j["seed"] = trial;
        RunConfig a = parse_config(j);
        json ja = to_json(a);
        RunConfig b = parse_config(ja);
        CHECK(to_json(b) == ja);
        CHECK(config_hash(a) == config_hash(b));
    }
}

TEST_CASE("build_field: cosine family reproduces 2 A cos(G.x + theta) on the grid")
{
    json j = minimal_1d();
    j["crystal"]["field"]["terms"] = {{{"miller", {2}}, {"amplitude", 0.5}, {"phase", 0.3}}};
    j["crystal"]["field"]["offset"] = 0.25;
    RunConfig c = parse_config(j);
    Lattice lat = c.lattice();
    PeriodicField f = build_field(c, lat, {32, 1, 1});
    VecR v = f.real_values();
    for (int i = 0; i < 32; i++) {
        double x = 2 * pi * i / 32;
        CHECK(v[i] == doctest::Approx(0.25 + 2 * 0.5 * std::cos(2 * x + 0.3)).epsilon(1e-14));
    }
}

// ---------------------------------------------------------------------------
// files

TEST_CASE("sha256_hex: standard test vectors")
{
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("DBYF: header layout and round trip of real and complex fields")
{
    std::mt19937_64 rng(3);
    MatR b(2, 2);
    b << 2.0, 0.5, 0.0, 3.0;
    Lattice lat(b);
    PeriodicField f = random_field(lat, {12, 10, 1}, 4.0, rng);
    std::string bytes = encode_dbyf(f);
    CHECK(bytes.substr(0, 4) == "DBYF");
    std::uint32_t hdr[4];
    std::memcpy(hdr, bytes.data() + 4, sizeof hdr);
    CHECK(hdr[0] == dbyf_version);
    CHECK(hdr[1] == 2);
    CHECK(hdr[2] == 12);
    CHECK(hdr[3] == 10);
    CHECK(bytes.size() == 4 + 4 * 4 + 8 * 4 + 4 + 8 * 120);
    PeriodicField g = decode_dbyf(bytes);
    CHECK(g.real);
    CHECK((g.lattice.basis - b).norm() == 0.0);
    CHECK((g.real_values() - f.real_values()).cwiseAbs().maxCoeff() < 1e-14);

    PeriodicField c(lat, {6, 4, 1}, false);
    for (size_t i = 0; i < c.size(); i++) {
        c.coeffs[i] = cplx(std::sin(double(i)), std::cos(3.0 * i));
    }
    PeriodicField cb = decode_dbyf(encode_dbyf(c));
    CHECK(!cb.real);
    CHECK((cb.coeffs - c.coeffs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("DBYF: bad magic, truncation and trailing bytes are config errors")
{
    PeriodicField f(line(), {8, 1, 1});
    std::string bytes = encode_dbyf(f);
    CHECK_THROWS_AS(decode_dbyf("XXXX" + bytes.substr(4)), ConfigError);
    CHECK_THROWS_AS(decode_dbyf(bytes.substr(0, bytes.size() - 3)), ConfigError);
    CHECK_THROWS_AS(decode_dbyf(bytes + "x"), ConfigError);
}

TEST_CASE("CSV: fixed formatting round-trips doubles and rejects ragged rows")
{
    std::string s = format_csv({"a", "b"}, {{0.1, 1.0 / 3}, {-2.5e-300, 1e20}});
    CHECK(s.substr(0, 4) == "a,b\n");
    CHECK(s.find("0.10000000000000001,0.33333333333333331") != std::string::npos);
    CHECK(std::stod("0.33333333333333331") == 1.0 / 3);
    CHECK_THROWS_AS(format_csv({"a"}, {{1.0, 2.0}}), ConfigError);
}

TEST_CASE("write_atomic and StageWriter: no temporary files; an unfinished stage has no manifest")
{
    fs::path dir = fs::temp_directory_path() / ("debye-forge-test-" + std::to_string(getpid()) + "-atomic");
    fs::remove_all(dir);
    {
        StageWriter w(dir, "demo");
        w.json_file("a.json", {{"x", 1}});
        w.finish("h", json::object());
    }
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(verify_manifest(dir).empty());
    {
        StageWriter w(dir, "demo"); // rerun interrupted before finish
        w.json_file("a.json", {{"x", 2}});
    }
    CHECK(!fs::exists(dir / "manifest.json"));
    for (const auto& e : fs::directory_iterator(dir)) {
        CHECK(e.path().extension() != ".tmp");
    }
    fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// pipeline

TEST_CASE("pipeline: crystal-only run emits the state bundle with a complete manifest")
{
    set_quiet(true);
    RunConfig c = small_config("crystal");
    run_pipeline(c, {Stage::crystal});
    fs::path dir = stage_dir(c.output, "crystal");
    json m = read_json(dir / "manifest.json");
    std::set<std::string> listed;
    for (const auto& o : m["outputs"]) {
        listed.insert(o["file"].get<std::string>());
    }
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string name = e.path().filename().string();
        if (name != "manifest.json") {
            CHECK_MESSAGE(listed.count(name), name);
        }
    }
    CHECK(listed.count("crystal.json"));
    CHECK(listed.count("phi.dbyf"));
    CHECK(verify_manifest(dir).empty());
    CHECK(m["config_sha256"] == config_hash(c));
    json j = read_json(dir / "crystal.json");
    CHECK(j["dielectric"] == true);
    PeriodicField phi = read_dbyf(dir / "phi.dbyf");
    CHECK(phi.coeff({1, 0, 0}).real() == doctest::Approx(1.0).epsilon(1e-14));
    fs::remove_all(c.output);
    set_quiet(false);
}

TEST_CASE("pipeline: missing dependency names the producing stage and leaves no manifest")
{
    RunConfig c = small_config("missing");
    try {
        run_stage(c, Stage::response);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("crystal") != std::string::npos);
        CHECK(msg.find("debye-forge crystal") != std::string::npos);
    }
    CHECK(!fs::exists(stage_dir(c.output, "response") / "manifest.json"));
    CHECK_THROWS_AS(run_stage(c, Stage::macro), ConfigError);
    fs::remove_all(c.output);
}

TEST_CASE("pipeline: identical configs give bit-identical JSON and CSV outputs")
{
    set_quiet(true);
    RunConfig a = small_config("det-a");
    RunConfig b = small_config("det-b");
    for (const RunConfig* c : {&a, &b}) {
        run_pipeline(*c, {Stage::crystal, Stage::response, Stage::macro, Stage::bands});
    }
    for (const char* s : {"crystal", "response", "macro", "bands"}) {
        auto ta = text_outputs(stage_dir(a.output, s));
        auto tb = text_outputs(stage_dir(b.output, s));
        CHECK(!ta.empty());
        CHECK(ta == tb);
    }
    fs::remove_all(a.output);
    fs::remove_all(b.output);
    set_quiet(false);
}

TEST_CASE("pipeline: a crystal bundle from another configuration is refused")
{
    set_quiet(true);
    RunConfig c = small_config("key");
    run_pipeline(c, {Stage::crystal});
    RunConfig other = c;
    other.T = 0.05;
    CHECK_THROWS_AS(run_stage(other, Stage::response), ConfigError);
    fs::remove_all(c.output);
    set_quiet(false);
}

TEST_CASE("pipeline: response and bands bundles agree with direct computation")
{
    set_quiet(true);
    RunConfig c = small_config("golden-small");
    run_pipeline(c, {Stage::response, Stage::bands}, true);
    CrystalState st = build_crystal(c);
    json r = read_json(stage_dir(c.output, "response") / "response.json");
    // phi passes through its grid values in phi.dbyf
    CHECK(r["eps"][0][0].get<double>() == doctest::Approx(epsilon_matrix(st).eps(0, 0)).epsilon(1e-12));
    CHECK(r["b0"].get<double>() == doctest::Approx(b_function(st, VecR::Zero(1))).epsilon(1e-10));
    std::string csv = read_file(stage_dir(c.output, "bands") / "bands.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 8 + 1);
    // the middle row is k = 0
    FiberEigen e0 = diagonalize_fiber(assemble_fiber(st.basis, st.phi, VecR::Zero(1)));
    std::istringstream in(csv);
    std::string row;
    for (int i = 0; i <= 9; i++) {
        std::getline(in, row);
    }
    std::vector<double> vals;
    std::stringstream rs(row);
    for (std::string cell; std::getline(rs, cell, ',');) {
        vals.push_back(std::stod(cell));
    }
    CHECK(vals[1] == 0.0);
    CHECK(vals[2] == doctest::Approx(e0.eval[0]).epsilon(1e-12));
    fs::remove_all(c.output);
    set_quiet(false);
}

TEST_CASE("pipeline: shipped Mathieu config reproduces the acceptance-suite coefficients")
{
    set_quiet(true);
    RunConfig c = parse_config_file(std::string(DEBYE_SOURCE_DIR) + "/configs/mathieu_1d.json");
    fs::path dir = fs::temp_directory_path() / ("debye-forge-test-" + std::to_string(getpid()) + "-golden");
    fs::remove_all(dir);
    c.output = dir.string();
    run_pipeline(c, {Stage::macro}, true);
    const CrystalState& ref = mathieu_crystal(40, 16);
    json cr = read_json(stage_dir(dir, "crystal") / "crystal.json");
    CHECK(cr["mu"].get<double>() == ref.occ.mu);
    json r = read_json(stage_dir(dir, "response") / "response.json");
    CHECK(r["eps"][0][0].get<double>() == doctest::Approx(epsilon_matrix(ref).eps(0, 0)).epsilon(1e-12));
    CHECK(r["m"].get<double>() == doctest::Approx(screening_mass_m(ref)).epsilon(1e-12));
    CHECK(r["b0"].get<double>() == doctest::Approx(b_function(ref, VecR::Zero(1))).epsilon(1e-10));
    json m = read_json(stage_dir(dir, "macro") / "macro.json");
    CHECK(m["energy_identity_defect"].get<double>() <= 1e-10);
    CHECK(m["decay"]["reliable"] == true);
    CHECK(std::abs(m["decay"]["axes"][0]["rel_error"].get<double>()) <= 0.05);
    fs::remove_all(dir);
    set_quiet(false);
}

TEST_CASE("pipeline: multiscale stage on small supercells")
{
    set_quiet(true);
    RunConfig c = small_config("multiscale");
    run_pipeline(c, {Stage::multiscale}, true);
    fs::path dir = stage_dir(c.output, "multiscale");
    json j = read_json(dir / "multiscale.json");
    REQUIRE(j["runs"].size() == 2);
    for (const auto& r : j["runs"]) {
        CHECK(r["decomposition_defect"].get<double>() < 1e-13);
        CHECK(r["rem_l2"].get<double>() < r["lead_l2"].get<double>());
    }
    CHECK(j.contains("rem_l2_slope"));
    CHECK(verify_manifest(dir).empty());
    CHECK(fs::exists(dir / "phi_rem_N4.dbyf"));
    fs::remove_all(c.output);
    set_quiet(false);
}

TEST_CASE("multiscale_kgrid: smallest common multiple of the k-grid and every N")
{
    CHECK(multiscale_kgrid({16, 1, 1}, 1, {8, 16, 32}) == Index3{32, 1, 1});
    CHECK(multiscale_kgrid({12, 1, 1}, 1, {8}) == Index3{24, 1, 1});
    CHECK(multiscale_kgrid({4, 6, 1}, 2, {2, 4}) == Index3{4, 12, 1});
}

// ---------------------------------------------------------------------------
// CLI

TEST_CASE("CLI: exit codes 0, 2, 3-or-4 and the thread variable")
{
    RunConfig c = small_config("cli");
    fs::path cfg = fs::path(c.output).string() + ".json";
    write_json(cfg, to_json(c));
    fs::path bad = fs::path(c.output).string() + "-bad.json";
    json jb = to_json(c);
    jb["ecut"] = -5;
    write_json(bad, jb);

    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("nosuchcommand") == 2);
    CHECK(run_cli("crystal -c " + bad.string()) == 2);
    CHECK(run_cli("response -c " + cfg.string()) == 2);
    CHECK(run_cli("crystal -c " + cfg.string(), "DEBYE_FORGE_THREADS=zero") == 2);
    CHECK(run_cli("crystal -c " + cfg.string(), "DEBYE_FORGE_THREADS=2") == 0);
    std::string first = read_file(stage_dir(c.output, "crystal") / "crystal.json");
    CHECK(run_cli("--threads 1 crystal -c " + cfg.string()) == 0);
    CHECK(read_file(stage_dir(c.output, "crystal") / "crystal.json") == first);
    CHECK(read_json(stage_dir(c.output, "crystal") / "manifest.json")["threads"] == 1);
    // m^{-8/9} delta is far above its threshold for this crystal
    CHECK(run_cli("response -c " + cfg.string()) == 0);
    CHECK(run_cli("--strict-regime response -c " + cfg.string()) == 4);
    fs::remove_all(c.output);
    fs::remove(cfg);
    fs::remove(bad);
}
