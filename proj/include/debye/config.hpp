// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file config.hpp
 *  \brief Run configuration: JSON schema, validation and defaults.
 */

#pragma once

#include "debye/macro.hpp"
#include "debye/multiscale.hpp"
#include "debye/response.hpp"
#include "debye/scf.hpp"

#include "json.hpp"

#include <optional>
#include <string>

namespace debye {

using json = nlohmann::json;

/// One term 2 A cos(G.x + theta) of a cosine series, G from Miller indices.
struct CosineTerm
{
    Index3 miller{1, 0, 0};
    double amplitude{1};
    double phase{0};
};

/// Analytic or file-backed periodic field on the crystal cell.
struct FieldSpec
{
    std::string family{"cosine"};      ///< cosine | gaussian | file
    std::vector<CosineTerm> cosine;
    std::vector<GaussianBump> gaussian; ///< centers in fractional coordinates
    double offset{0};                   ///< added constant
    std::string file;                   ///< DBYF grid file
};

enum class CrystalMode
{
    construct, ///< field is phi_per; kappa is designed so that phi_per is self-consistent
    scf        ///< field is kappa; phi from the SCF iteration
};

enum class MuChoice
{
    gap_center,
    fixed,
    fixed_charge
};

struct ResponseParams
{
    Route route{Route::eigen};
    double delta{0.0625};
    double a{0.25};       ///< P_r cut a = delta r
    int k_samples{16};
    double kmax{0.1};
    int fit_degree{6};
    double alpha{0.1};
    double theta_threshold{0.1};
};

/// Source bump of the macro problem; center in fractional box coordinates, width in Debye lengths.
struct MacroSource
{
    VecR center;
    double width{0.02};
    double charge{1};
};

struct MacroParams
{
    double box_debye_lengths{12};
    Index3 grid{4096, 1, 1};
    std::vector<MacroSource> sources;
};

struct MultiscaleParams
{
    std::vector<double> deltas{0.125, 0.0625, 0.03125};
    std::vector<GaussianBump> bumps; ///< kappa' on the micro cell; centers fractional
    double exponent{3};
    double a{0.25};
    NewtonOptions newton;
};

struct BandsParams
{
    std::vector<VecR> path; ///< fractional vertices
    int points{64};         ///< per segment
    int nbands{8};
};

struct RunConfig
{
    MatR basis;                 ///< d x d, columns are lattice vectors
    CrystalMode mode{CrystalMode::construct};
    FieldSpec field;
    double ecut{200};
    Index3 kgrid{16, 1, 1};
    double T{0.025};
    MuChoice mu_choice{MuChoice::gap_center};
    int gap_index{1};
    double mu{0};
    double target_charge{1};
    SCFConfig scf;
    ResponseParams response;
    MacroParams macro;
    MultiscaleParams multiscale;
    BandsParams bands;
    std::string output{"debye-out"};
    unsigned seed{1};

    int d() const
    {
        return static_cast<int>(basis.rows());
    }
    Lattice lattice() const
    {
        return Lattice(basis);
    }
};

/// Parse and validate; every violation is collected and reported in one ConfigError.
/// Unknown keys are violations unless lax, where they become warnings.
RunConfig parse_config(const json& j, bool lax = false);
RunConfig parse_config_file(const std::string& path, bool lax = false);

/// Full configuration with defaults filled in.
json to_json(const RunConfig& c);

/// SHA-256 of the canonical serialization.
std::string config_hash(const RunConfig& c);

/// Field of `spec` on the crystal cell and grid.
PeriodicField build_field(const RunConfig& c, const Lattice& lat, const Index3& grid);

} // namespace debye
