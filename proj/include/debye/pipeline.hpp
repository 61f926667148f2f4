// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file pipeline.hpp
 *  \brief Stages crystal -> response -> macro -> multiscale (and bands), each writing a
 *  bundle directory <output>/<stage> with JSON, CSV and DBYF files and a manifest.
 */

#pragma once

#include "debye/config.hpp"
#include "debye/io.hpp"

#include <string>
#include <vector>

namespace debye {

enum class Stage
{
    crystal,
    response,
    macro,
    multiscale,
    bands
};

const char* stage_name(Stage s);
/// ConfigError for unknown names.
Stage stage_from_name(const std::string& name);
/// Stages that must have run before s.
std::vector<Stage> stage_dependencies(Stage s);

/// Periodic state from the config (construct or SCF), without writing anything.
CrystalState build_crystal(const RunConfig& c);
/// Same crystal on a different k-grid: phi_per and mu kept, kappa rebuilt.
CrystalState rebuild_crystal(const RunConfig& c, const PeriodicField& phi, double mu, const Index3& kgrid);
/// State recorded in the crystal bundle under `root`.
CrystalState load_crystal(const RunConfig& c, const fs::path& root);

/// Hash of the configuration fields that determine the crystal.
std::string crystal_key(const RunConfig& c);

/// Run one stage; its dependencies must already be on disk. Returns the stage summary.
nlohmann::json run_stage(const RunConfig& c, Stage s);
/// Run `stages` in pipeline order; with with_deps missing upstream bundles are produced first.
nlohmann::json run_pipeline(const RunConfig& c, const std::vector<Stage>& stages, bool with_deps = false);

/// Smallest k-grid that is a multiple of `kgrid` and divisible by every N.
Index3 multiscale_kgrid(const Index3& kgrid, int d, const std::vector<int>& Ns);

} // namespace debye
