// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file debye-forge.cpp
 *  \brief Command-line driver. Exit codes: 0 ok, 2 config error, 3 numerical failure,
 *  4 regime violation (with --strict-regime).
 */

#include "debye/acceptance.hpp"
#include "debye/errors.hpp"
#include "debye/log.hpp"
#include "debye/pipeline.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

using namespace debye;

namespace {

struct Options
{
    std::string config;
    std::string output;
    bool lax{false};
    bool strict_regime{false};
    bool with_deps{false};
    bool quiet{false};
    int threads{0};
    std::vector<int> only;
    unsigned seed{1};
    std::string report;
};

int threads_from_env()
{
    const char* s = std::getenv("DEBYE_FORGE_THREADS");
    if (!s || !*s) {
        return 0;
    }
    char* end = nullptr;
    long n = std::strtol(s, &end, 10);
    if (*end != '\0' || n < 1) {
        throw ConfigError(std::string("DEBYE_FORGE_THREADS must be a positive integer (got \"") + s + "\")");
    }
    return static_cast<int>(n);
}

int run_stage_command(const Options& o, Stage s)
{
    RunConfig c = parse_config_file(o.config, o.lax);
    if (!o.output.empty()) {
        c.output = o.output;
    }
    nlohmann::json summary = run_pipeline(c, {s}, o.with_deps);
    if (!o.quiet) {
        std::cout << summary.dump(2) << "\n";
    }
    return 0;
}

int run_verify(const Options& o)
{
    AcceptanceOptions opt;
    opt.only = o.only;
    opt.seed = o.seed;
    opt.on_result = [](const CriterionResult& r) { std::cout << format_result(r) << std::endl; };
    auto results = run_acceptance(opt);
    int failed = 0;
    nlohmann::json rep = nlohmann::json::array();
    for (const auto& r : results) {
        failed += !r.pass;
        rep.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail}});
    }
    std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed" << std::endl;
    if (!o.report.empty()) {
        write_json(o.report, rep);
    }
    return failed ? 3 : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"debye-forge: dielectric crystals, homogenized screening and multiscale checks"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--threads", o.threads, "worker cap (default: DEBYE_FORGE_THREADS or 1)")->check(CLI::PositiveNumber);
    app.add_flag("--strict-regime", o.strict_regime, "regime diagnostics outside their thresholds are errors (exit 4)");
    app.add_flag("-q,--quiet", o.quiet, "suppress warnings and summaries");

    auto stage_cmd = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--output", o.output, "output root (overrides the config)");
        sub->add_flag("--lax", o.lax, "unknown config keys are warnings instead of errors");
        sub->add_flag("--with-deps", o.with_deps, "produce missing upstream bundles first");
        return sub;
    };
    CLI::App* crystal = stage_cmd("crystal", "periodic state: designer dielectric or SCF");
    CLI::App* response = stage_cmd("response", "response operator and homogenized coefficients");
    CLI::App* macro = stage_cmd("macro", "homogenized Poisson-Boltzmann solve and Debye observables");
    CLI::App* multiscale = stage_cmd("multiscale", "supercell solves and the expansion remainder");
    CLI::App* bands = stage_cmd("bands", "band structure along a k-path");
    CLI::App* verify = app.add_subcommand("verify", "run the acceptance suite");
    verify->add_option("--only", o.only, "criterion numbers to run")->delimiter(',')->check(CLI::Range(1, acceptance_count));
    verify->add_option("--seed", o.seed, "seed for random directions");
    verify->add_option("--report", o.report, "write results as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        set_quiet(o.quiet);
        set_strict_regime(o.strict_regime);
        int env = threads_from_env();
        set_thread_count(o.threads > 0 ? o.threads : env > 0 ? env : 1);
        if (verify->parsed()) {
            return run_verify(o);
        }
        const std::pair<CLI::App*, Stage> stages[] = {{crystal, Stage::crystal},
                                                       {response, Stage::response},
                                                       {macro, Stage::macro},
                                                       {multiscale, Stage::multiscale},
                                                       {bands, Stage::bands}};
        for (const auto& [sub, st] : stages) {
            if (sub->parsed()) {
                return run_stage_command(o, st);
            }
        }
    } catch (const RegimeViolation& e) {
        std::cerr << "regime violation: " << e.what() << "\n";
        return o.strict_regime ? e.exit_code() : 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
