// Pipeline orchestration shared by the CLI and the integration tests: each
// command reads a RunConfig, runs the corresponding module operations, and
// emits bit-stable CSV/JSON artifacts into the configured output directory.

#pragma once

#include <string>
#include <vector>

#include "ftla/config.hpp"

namespace ftla {

struct RunResult {
    int exit_code = 0;
    std::vector<std::string> files;  // paths written
};

// command: spectrum | diagnose | manifold | ildm | verify | converge.
// Exit code 0 on success, 2 when the diagnose verdict is false; errors throw.
RunResult run_command(const RunConfig& cfg, const std::string& command);

}  // namespace ftla
