// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file io.hpp
 *  \brief Output files: DBYF grid binaries, CSV tables, JSON reports, content hashes
 *  and the per-stage manifest. Every file is written to a temporary name and renamed.
 *
 *  DBYF layout (little-endian):
 *    char[4] "DBYF", u32 version (1), u32 d, u32 grid[d], f64 basis[d*d] (column-major),
 *    u32 kind (0: real grid values, 1: complex coefficients in FFT order), payload f64[n] or f64[2n].
 */

#pragma once

#include "debye/field.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace debye {

namespace fs = std::filesystem;

constexpr std::uint32_t dbyf_version = 1;

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);

/// Write bytes to path.tmp and rename over path.
void write_atomic(const fs::path& path, const std::string& bytes);
std::string read_file(const fs::path& path);

std::string encode_dbyf(const PeriodicField& f);
PeriodicField decode_dbyf(const std::string& bytes);
void write_dbyf(const fs::path& path, const PeriodicField& f);
PeriodicField read_dbyf(const fs::path& path);

/// Fixed formatting (%.17g) so identical data gives identical bytes.
std::string format_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

/// Collects the files of one stage and writes manifest.json last.
class StageWriter
{
  public:
    StageWriter(const fs::path& dir, std::string stage);

    const fs::path& dir() const
    {
        return dir_;
    }
    void json_file(const std::string& name, const nlohmann::json& j);
    void csv_file(const std::string& name, const std::vector<std::string>& header,
                  const std::vector<std::vector<double>>& rows);
    void field_file(const std::string& name, const PeriodicField& f);

    /// Manifest: stage, tool version, config hash, threads, timings, warnings and every output with its hash.
    void finish(const std::string& config_hash, const nlohmann::json& timings);

  private:
    void record(const std::string& name, const std::string& bytes);

    fs::path dir_;
    std::string stage_;
    nlohmann::json outputs_ = nlohmann::json::array();
};

/// Path of a stage directory under the output root.
fs::path stage_dir(const fs::path& root, const std::string& stage);

/// Manifest of a finished stage; ConfigError naming the producing stage when absent.
nlohmann::json require_stage(const fs::path& root, const std::string& stage, const std::string& needed_by);

/// Recompute the hashes listed in a manifest; returns the names that differ or are missing.
std::vector<std::string> verify_manifest(const fs::path& dir);

const char* tool_version();

} // namespace debye
