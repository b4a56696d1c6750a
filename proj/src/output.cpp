#include "ftla/output.hpp"

#include <cstdio>
#include <fstream>

#include "ftla/error.hpp"

namespace ftla {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {

std::string quote_if_needed(const std::string& field) {
    bool need = false;
    for (char c : field)
        if (c == ',' || c == '"' || c == '\n' || c == '\r') need = true;
    if (!need) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void write_csv(const std::string& path, const Csv& csv, const std::string& config_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file '" + path + "'");
    out << "# ftla " << kToolVersion << "\n";
    out << "# config-hash " << config_hash << "\n";
    for (std::size_t i = 0; i < csv.columns.size(); ++i) {
        if (i) out << ',';
        out << quote_if_needed(csv.columns[i]);
    }
    out << '\n';
    for (const auto& row : csv.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << quote_if_needed(row[i]);
        }
        out << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file '" + path + "'");
    out << content;
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace ftla
