#ifndef PMLE_IO_HPP
#define PMLE_IO_HPP

#include <cerrno>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pmle/common.hpp"

namespace pmle::io {

/// One value per line; an optional first line "value" (or any non-numeric header) is skipped.
/// Only the first comma-separated field of each line is read.
inline Sample read_sample(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    Sample out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto c = line.find(','); c != std::string::npos) line.resize(c);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        const std::string field = line.substr(b, e - b + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(field, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != field.size()) {
            if (lineno == 1 && out.empty()) continue;
            throw Error(path.string() + ":" + std::to_string(lineno) + ": not a number: " + field);
        }
        if (!std::isfinite(v)) throw Error(path.string() + ":" + std::to_string(lineno) + ": non-finite value");
        out.push_back(v);
    }
    if (out.empty()) throw Error(path.string() + " holds no values");
    return out;
}

/// Writes through a sibling temp file and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + path.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot move output into place at " + path.string());
    }
}

/// Round-trippable text form of a double.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace pmle::io

#endif
