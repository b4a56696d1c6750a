// Bit-stable result emission: all numeric CSV/JSON output is formatted with
// 17 significant digits, '.' decimal point, no locale.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ftla {

inline constexpr const char* kToolVersion = "0.1.0";

std::string fmt17(double v);

// FNV-1a 64-bit, used as the config fingerprint in output headers.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

struct Csv {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

// Writes '#'-prefixed header lines (tool version, config hash), then an
// RFC-4180-style table (fields quoted only when they need it).
void write_csv(const std::string& path, const Csv& csv, const std::string& config_hash);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ftla
