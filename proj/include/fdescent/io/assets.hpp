#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fdescent/error.hpp"

#ifndef FDESCENT_ASSET_DIR
#define FDESCENT_ASSET_DIR "assets"
#endif

namespace fdescent::io {

// FDESCENT_ASSETS in the environment overrides the build-time location.
inline std::filesystem::path asset_dir() {
    if (const char* env = std::getenv("FDESCENT_ASSETS"); env && *env) return env;
    return FDESCENT_ASSET_DIR;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + p.string());
    out << content;
    if (!out) throw InputError("write failed for " + p.string());
}

}  // namespace fdescent::io
