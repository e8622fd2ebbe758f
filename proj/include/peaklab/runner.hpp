#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace peaklab {

enum class Command { check, mesh, solve, eigs, evolve, equilibria, attractor, rates };

Command parse_command(const std::string& name);
std::string to_string(Command c);
const std::vector<std::string>& command_names();

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_numerical = 3;

struct RunOptions {
    std::string config_path;
    int jobs = 1;
    std::optional<std::string> out;  ///< overrides the config's output_dir
    std::ostream* log = nullptr;     ///< summary table and messages; nullptr is silent
};

struct RunOutcome {
    int exit_code = exit_ok;
    std::string out_dir;
    std::vector<std::string> files;  ///< relative to out_dir
    std::vector<std::string> flags;
    std::string message;  ///< validation or numerical error text
};

/// Runs one pipeline, writes its outputs and updates <out>/manifest.json.
/// Validation errors give exit 2, numerical flags or failures exit 3.
RunOutcome run(Command command, const RunOptions& options);

/// Consolidates a run directory into <run_dir>/report/summary.md and one
/// two-column plot-data file per rate table. Exit 2 without a manifest.
RunOutcome report(const std::string& run_dir, std::ostream* log = nullptr);

/// Flags that turn a run into exit 3.
bool is_numerical_flag(const std::string& flag);

}  // namespace peaklab
