#pragma once

// Command implementations behind the penalized_nls executable.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pnls/config.hpp"

namespace pnls {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int config = 2;
inline constexpr int not_converged = 3;
inline constexpr int condition_failed = 4;
}  // namespace exit_code

struct CommandOptions {
    std::string command;  // solve | sweep | check | limit | decay-fit
    std::filesystem::path config;
    std::optional<double> hbar;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::pair<double, double>> window;  // decay-fit, in domain units
};

/// Runs one command; returns the process exit code. Progress goes to `log`,
/// diagnostics to `err`.
int run_command(const CommandOptions& opts, std::ostream& log, std::ostream& err);

/// Data-parallel width cap from PENALIZED_NLS_THREADS (default 1).
int thread_cap();

/// 17 significant digits, the CSV number format.
std::string format_number(double v);

void write_solution_csv(const std::filesystem::path& path, const ScalarField& u);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRecord>& records, int dim);

}  // namespace pnls
