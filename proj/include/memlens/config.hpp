#pragma once

#include "memlens/platform.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace memlens {

/// Configuration error tied to a line of the input (0 when not attributable).
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::size_t line, const std::string& what);
    // Same error, reported against `file`.
    ConfigError(const std::string& file, const ConfigError& inner);
    std::size_t line() const { return line_; }
    const std::string& detail() const { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

// INI text: [section] headers, `key = value`, `#` comments. Sections are
// clock, dram, timing, map, hierarchy, engine, sweep. Relative scheme_file
// paths resolve against `base_dir`.
PlatformConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
PlatformConfig load_config(const std::filesystem::path& path);

}  // namespace memlens
