#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wehrlflux/commands.hpp"

using namespace wehrlflux;

int main(int argc, char** argv) {
    CLI::App app{"Phase-space entropy production for driven-dissipative bosonic models"};
    app.set_version_flag("--version", std::string("wehrlflux ") + version_string());
    app.require_subcommand(1);

    std::string config_path;
    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Run every point of a JSON configuration");
    run->add_option("config", config_path, "Configuration file")->required();
    run->add_flag("--keep-going", run_opts.keep_going, "Exit 0 even if some points fail");
    run->add_option("--threads", run_opts.threads,
                    "Worker threads (default: WEHRLFLUX_THREADS, else 1)")
        ->check(CLI::Range(1, 1024));

    std::string collapse_path;
    double eps_c = 0.0;
    auto* collapse = app.add_subcommand("collapse", "Rescale a Kerr sweep against N (eps/eps_c - 1)");
    collapse->add_option("results", collapse_path, "Results CSV")->required();
    collapse->add_option("--eps-c", eps_c, "Critical drive")->required()->check(CLI::PositiveNumber);

    std::string fit_path;
    std::string window_text;
    auto* fit = app.add_subcommand("fit-divergence", "Log-log slopes of Pi_d on both sides of lambda_c");
    fit->add_option("results", fit_path, "Results CSV")->required();
    fit->add_option("--window", window_text, "Relative distance range lo,hi, e.g. 0.01,0.1")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (*run) return run_command(config_path, run_opts, std::cout, std::cerr);
    if (*collapse) return collapse_command(collapse_path, eps_c, std::cout, std::cerr);
    if (*fit) {
        DivergenceWindow w;
        char extra = 0;
        if (std::sscanf(window_text.c_str(), "%lf,%lf%c", &w.lo, &w.hi, &extra) != 2 ||
            !(w.lo > 0.0) || !(w.hi > w.lo)) {
            std::cerr << "--window expects lo,hi with 0 < lo < hi\n";
            return kExitUsage;
        }
        return fit_divergence_command(fit_path, w, std::cout, std::cerr);
    }
    return kExitUsage;
}
