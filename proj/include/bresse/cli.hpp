#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

namespace bresse {

struct CliOptions {
    std::string out = "out";
    std::uint64_t seed = 1;
    int threads = 1;
};

struct RunResult {
    int exit_code = 0;
    nlohmann::json record;  ///< run-log record (or error JSON when exit_code != 0)
};

/// Validates a config and runs one command, writing artifacts under opts.out
/// and appending a record to <out>/runs.jsonl. Never throws: failures map to
/// exit 2 (schema, precondition, regime) or 1 (numerical, internal).
RunResult dispatch(const nlohmann::json& config, const CliOptions& opts);

/// Markdown summary of a JSONL run log grouped by theorem. Malformed lines
/// are skipped and counted.
std::string render_report(const std::string& jsonl, int* skipped = nullptr);

/// 64-bit FNV-1a of the canonical JSON text, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

/// Entry point used by the disspec executable.
int run_cli(int argc, char** argv);

}  // namespace bresse
