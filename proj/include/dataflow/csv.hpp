#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "dataflow/errors.hpp"
#include "dataflow/field.hpp"
#include "dataflow/front.hpp"
#include "dataflow/grid.hpp"
#include "dataflow/params.hpp"

namespace dataflow {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first != last && *first == ' ') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc()) throw ConfigError("csv: not a number: '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    return os;
}

/// Row-major grid dump: one metadata header, one column header, then one row
/// per cell (i outer, j inner).
inline void write_grid_csv(const std::filesystem::path& path, const Grid& g, const FieldState& st,
                           const ModelParams& p) {
    std::ofstream os = open_for_write(path);
    os << "nx,nz,t,rho_star,eta,r\n";
    os << g.nx << ',' << g.nz << ',' << format_double(st.t) << ',' << format_double(p.rho_star)
       << ',' << format_double(p.eta) << ',' << format_double(p.r) << '\n';
    os << "x,z,R,S\n";
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nz; ++j) {
            const std::size_t c = g.idx(i, j);
            os << format_double(g.x(i)) << ',' << format_double(g.z(j)) << ','
               << format_double(st.R[c]) << ',' << format_double(st.S[c]) << '\n';
        }
}

struct GridCsv {
    int nx = 0, nz = 0;
    double t = 0.0;
    ModelParams params;
    std::vector<double> x, z, R, S; ///< row-major, i*nz + j
};

inline GridCsv read_grid_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "nx,nz,t,rho_star,eta,r")
        throw ConfigError("grid csv: bad metadata header in " + path.string());
    if (!std::getline(is, line)) throw ConfigError("grid csv: missing metadata row");
    auto meta = split_csv_line(line);
    if (meta.size() != 6) throw ConfigError("grid csv: bad metadata row");
    GridCsv out;
    out.nx = static_cast<int>(parse_double(meta[0]));
    out.nz = static_cast<int>(parse_double(meta[1]));
    out.t = parse_double(meta[2]);
    out.params.rho_star = parse_double(meta[3]);
    out.params.eta = parse_double(meta[4]);
    out.params.r = parse_double(meta[5]);
    if (!std::getline(is, line) || line != "x,z,R,S")
        throw ConfigError("grid csv: bad column header");
    const std::size_t n = static_cast<std::size_t>(out.nx) * out.nz;
    out.x.reserve(n);
    out.z.reserve(n);
    out.R.reserve(n);
    out.S.reserve(n);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 4) throw ConfigError("grid csv: bad data row '" + line + "'");
        out.x.push_back(parse_double(f[0]));
        out.z.push_back(parse_double(f[1]));
        out.R.push_back(parse_double(f[2]));
        out.S.push_back(parse_double(f[3]));
    }
    if (out.R.size() != n) throw ConfigError("grid csv: cell count mismatch in " + path.string());
    return out;
}

/// Front profile: two columns (x, zeta), one row per grid point.
inline void write_front_csv(const std::filesystem::path& path, const FrontProfile& f) {
    std::ofstream os = open_for_write(path);
    os << "x,zeta\n";
    const int n = f.size();
    for (int i = 0; i < n; ++i)
        os << format_double((i + 0.5) / n) << ','
           << format_double(f.zeta[static_cast<std::size_t>(i)]) << '\n';
}

inline FrontProfile read_front_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "x,zeta") throw ConfigError("front csv: bad header");
    FrontProfile f;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cols = split_csv_line(line);
        if (cols.size() != 2) throw ConfigError("front csv: bad row '" + line + "'");
        f.zeta.push_back(parse_double(cols[1]));
    }
    return f;
}

/// Flat key,value table (metadata, error summaries).
inline void write_kv_csv(const std::filesystem::path& path,
                         const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ofstream os = open_for_write(path);
    os << "key,value\n";
    for (const auto& [k, v] : rows) os << k << ',' << v << '\n';
}

inline std::map<std::string, std::string> read_kv_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "key,value") throw ConfigError("kv csv: bad header");
    std::map<std::string, std::string> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto pos = line.find(',');
        if (pos == std::string::npos) throw ConfigError("kv csv: bad row '" + line + "'");
        out[line.substr(0, pos)] = line.substr(pos + 1);
    }
    return out;
}

} // namespace dataflow
