#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jetforge/problem.hpp"

namespace jetforge {

using Report = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "jetforge-report/1";

/// Command-line overrides; unset fields fall back to query arguments and
/// then to per-command defaults.
struct RunFlags {
    std::optional<int> order;
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> seed;
    std::optional<RankMode> mode;
    std::optional<std::string> free_data;  // zero | random | file
    std::optional<std::string> free_file;  // JSON table for --free-data file
    std::optional<int> qmax;
    bool timings = false;
};

/// Commands that dispatch to a module.
const std::vector<std::string>& command_names();
bool is_command(const std::string& name);

class UsageError : public Error {
public:
    using Error::Error;
};

/// Runs `command` on the problem: once per matching query in the file (with
/// its arguments), or once with defaults when none matches. The command
/// `run` executes every query in file order. Module errors are caught and
/// reported as failed results.
Report run_command(const ProblemSpec& problem, const std::string& command, const RunFlags& flags);

/// 0 when every result passed, 1 otherwise.
int report_exit_code(const Report& r);

std::string emit_json(const Report& r);
/// Indented key: value rendering for terminals.
std::string emit_text(const Report& r);

}  // namespace jetforge
