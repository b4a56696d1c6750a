// Run configuration: JSON ingestion, validation, defaulting from the built-in
// systems, and round-trippable serialization.

#pragma once

#include <array>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>

#include "ftla/bench.hpp"

namespace ftla {

struct SystemSpec {
    std::string builtin;                      // one of the benchmark names, or empty
    std::map<std::string, double> overrides;  // parameter overrides for builtins
    std::string dsl_file;                     // used when builtin is empty
};

struct ManifoldConfig {
    std::vector<int> independent;                 // 1-based coordinate indices
    std::vector<std::vector<double>> values;      // grid of independent values
    std::vector<double> guess;                    // dependents for the first point
    SolveSchedule schedule{};
    SolveTols tols{};
    bool warm_start = true;
    double dt = 0;                                // 0 = use the top-level dt
    double escape_factor = 10.0;                  // escape guard, times region diameter
};

struct VerifyConfig {
    double t_plus = 1.5;
    double t_minus = -1.0;
    std::string estimator = "both";  // ftla | ildm | both
};

struct ConvergeCheck {
    std::string direction = "-";  // "+" or "-"
    int index = 1;                // Lyapunov subspace / vector index, 1-based
};

struct ConvergeConfig {
    std::vector<ConvergeCheck> checks;
    std::vector<double> T_grid;
};

struct RunConfig {
    SystemSpec system;
    Region region;
    bool region_from_config = false;
    double T_bar = 0;
    std::optional<std::array<int, 3>> dims;  // (ns, nc, nu) override
    DiagnoseOptions diagnosis{};
    ManifoldConfig manifold{};
    VerifyConfig verify{};
    ConvergeConfig converge{};
    std::string output_dir = "out";
    std::uint64_t seed = 7;

    // Resolved system plus effective region/T_bar/dims.
    BenchmarkSystem resolve() const;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);

// Canonical serialized form used for the output-header fingerprint.
std::string config_hash(const RunConfig& cfg);

}  // namespace ftla
