// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

#include "debye/io.hpp"

#include "debye/errors.hpp"
#include "debye/log.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace debye {

static_assert(std::endian::native == std::endian::little, "DBYF writer assumes a little-endian host");

const char* tool_version()
{
    return "1.0.0";
}

std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw NumericalError("sha256: digest failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; i++) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_file(const fs::path& path)
{
    return sha256_hex(read_file(path));
}

void write_atomic(const fs::path& path, const std::string& bytes)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ConfigError("cannot write " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            fs::remove(tmp);
            throw ConfigError("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

namespace {

template <class T>
void put(std::string& s, T v)
{
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    s.append(b, sizeof(T));
}

template <class T>
T take(const std::string& s, size_t& pos)
{
    if (pos + sizeof(T) > s.size()) {
        throw ConfigError("DBYF: truncated file");
    }
    T v;
    std::memcpy(&v, s.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

} // namespace

std::string encode_dbyf(const PeriodicField& f)
{
    const int d = f.lattice.d;
    std::string s = "DBYF";
    put<std::uint32_t>(s, dbyf_version);
    put<std::uint32_t>(s, static_cast<std::uint32_t>(d));
    for (int i = 0; i < d; i++) {
        put<std::uint32_t>(s, static_cast<std::uint32_t>(f.grid[i]));
    }
    for (int j = 0; j < d; j++) {
        for (int i = 0; i < d; i++) {
            put<double>(s, f.lattice.basis(i, j));
        }
    }
    put<std::uint32_t>(s, f.real ? 0u : 1u);
    if (f.real) {
        VecR v = f.real_values();
        for (Eigen::Index i = 0; i < v.size(); i++) {
            put<double>(s, v[i]);
        }
    } else {
        for (Eigen::Index i = 0; i < f.coeffs.size(); i++) {
            put<double>(s, f.coeffs[i].real());
            put<double>(s, f.coeffs[i].imag());
        }
    }
    return s;
}

PeriodicField decode_dbyf(const std::string& bytes)
{
    if (bytes.size() < 4 || bytes.compare(0, 4, "DBYF") != 0) {
        throw ConfigError("DBYF: bad magic");
    }
    size_t pos = 4;
    auto version = take<std::uint32_t>(bytes, pos);
    if (version != dbyf_version) {
        throw ConfigError("DBYF: unsupported version " + std::to_string(version));
    }
    auto d = take<std::uint32_t>(bytes, pos);
    if (d < 1 || d > 3) {
        throw ConfigError("DBYF: dimension must be 1, 2 or 3");
    }
    Index3 grid{1, 1, 1};
    for (unsigned i = 0; i < d; i++) {
        grid[i] = static_cast<int>(take<std::uint32_t>(bytes, pos));
        if (grid[i] < 1) {
            throw ConfigError("DBYF: empty grid axis");
        }
    }
    MatR basis(d, d);
    for (unsigned j = 0; j < d; j++) {
        for (unsigned i = 0; i < d; i++) {
            basis(i, j) = take<double>(bytes, pos);
        }
    }
    auto kind = take<std::uint32_t>(bytes, pos);
    Lattice lat(basis);
    size_t n = grid_size(grid);
    if (kind == 0) {
        VecR v(n);
        for (size_t i = 0; i < n; i++) {
            v[i] = take<double>(bytes, pos);
        }
        if (pos != bytes.size()) {
            throw ConfigError("DBYF: trailing bytes");
        }
        return PeriodicField::from_real_values(lat, grid, v);
    }
    if (kind != 1) {
        throw ConfigError("DBYF: unknown payload kind");
    }
    PeriodicField f(lat, grid, false);
    for (size_t i = 0; i < n; i++) {
        double re = take<double>(bytes, pos);
        double im = take<double>(bytes, pos);
        f.coeffs[i] = cplx(re, im);
    }
    if (pos != bytes.size()) {
        throw ConfigError("DBYF: trailing bytes");
    }
    return f;
}

void write_dbyf(const fs::path& path, const PeriodicField& f)
{
    write_atomic(path, encode_dbyf(f));
}

PeriodicField read_dbyf(const fs::path& path)
{
    return decode_dbyf(read_file(path));
}

std::string format_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows)
{
    std::string s;
    for (size_t i = 0; i < header.size(); i++) {
        s += (i ? "," : "") + header[i];
    }
    s += '\n';
    char buf[40];
    for (const auto& r : rows) {
        if (r.size() != header.size()) {
            throw ConfigError("csv: row width differs from the header");
        }
        for (size_t i = 0; i < r.size(); i++) {
            std::snprintf(buf, sizeof buf, "%.17g", r[i]);
            s += (i ? "," : "");
            s += buf;
        }
        s += '\n';
    }
    return s;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows)
{
    write_atomic(path, format_csv(header, rows));
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    write_atomic(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path)
{
    std::string s = read_file(path);
    try {
        return nlohmann::json::parse(s);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

StageWriter::StageWriter(const fs::path& dir, std::string stage)
    : dir_(dir)
    , stage_(std::move(stage))
{
    fs::create_directories(dir_);
    fs::remove(dir_ / "manifest.json");
}

void StageWriter::record(const std::string& name, const std::string& bytes)
{
    write_atomic(dir_ / name, bytes);
    outputs_.push_back({{"file", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
}

void StageWriter::json_file(const std::string& name, const nlohmann::json& j)
{
    record(name, j.dump(2) + "\n");
}

void StageWriter::csv_file(const std::string& name, const std::vector<std::string>& header,
                           const std::vector<std::vector<double>>& rows)
{
    record(name, format_csv(header, rows));
}

void StageWriter::field_file(const std::string& name, const PeriodicField& f)
{
    record(name, encode_dbyf(f));
}

void StageWriter::finish(const std::string& config_hash, const nlohmann::json& timings)
{
    nlohmann::json m;
    m["stage"] = stage_;
    m["tool"] = "debye-forge";
    m["version"] = tool_version();
    m["config_sha256"] = config_hash;
    m["threads"] = thread_count();
    m["timings_s"] = timings;
    m["warnings"] = recorded_warnings();
    m["outputs"] = outputs_;
    write_json(dir_ / "manifest.json", m);
}

fs::path stage_dir(const fs::path& root, const std::string& stage)
{
    return root / stage;
}

nlohmann::json require_stage(const fs::path& root, const std::string& stage, const std::string& needed_by)
{
    fs::path m = stage_dir(root, stage) / "manifest.json";
    if (!fs::exists(m)) {
        throw ConfigError(needed_by + " needs the " + stage + " bundle, missing at " + stage_dir(root, stage).string() +
                          "; run `debye-forge " + stage + "` with the same config first");
    }
    return read_json(m);
}

std::vector<std::string> verify_manifest(const fs::path& dir)
{
    nlohmann::json m = read_json(dir / "manifest.json");
    std::vector<std::string> bad;
    for (const auto& o : m.at("outputs")) {
        std::string name = o.at("file");
        fs::path p = dir / name;
        if (!fs::exists(p) || sha256_file(p) != o.at("sha256").get<std::string>()) {
            bad.push_back(name);
        }
    }
    return bad;
}

} // namespace debye
