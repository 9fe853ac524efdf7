#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wehrlflux/dicke_gaussian.hpp"
#include "wehrlflux/kerr_model.hpp"
#include "wehrlflux/results_io.hpp"
#include "wehrlflux/run_config.hpp"

namespace wehrlflux {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConfig = 2,
    kExitNumerical = 3,
    kExitIo = 4,
};

/// Maps an exception to the exit code of its category.
int exit_code_for(const std::exception& e);

/// Explicit value if positive, else WEHRLFLUX_THREADS, else 1.
int resolve_threads(int requested);

const char* version_string();

struct RunOptions {
    bool keep_going = false;
    int threads = 0;
};

struct RunSummary {
    std::vector<ResultRow> rows;
    std::vector<std::string> failures;
    std::vector<std::string> warnings;
    Metadata meta;
    /// largest relative deviation from the Monte-Carlo cross-check, dicke only
    double mc_max_rel_dev = 0.0;
};

/// Runs every point of cfg, streaming rows to a journal next to the output and
/// finally writing the sorted table atomically. Failed points are listed in
/// the summary and left out of the table.
RunSummary execute_run(const RunConfig& cfg, int threads);

/// Converters used by execute_run.
ResultRow to_row(const SweepRecord& r, const std::string& model);
ResultRow to_row(const DickePoint& pt);

/// The three subcommands. Diagnostics go to err; the return value is the
/// process exit status.
int run_command(const std::string& config_path, const RunOptions& opts, std::ostream& out,
                std::ostream& err);
int collapse_command(const std::string& results_path, double eps_c, std::ostream& out,
                     std::ostream& err);
int fit_divergence_command(const std::string& results_path, const DivergenceWindow& window,
                           std::ostream& out, std::ostream& err);

}  // namespace wehrlflux
