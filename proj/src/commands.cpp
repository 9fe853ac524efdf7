#include "wehrlflux/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <ostream>
#include <set>

#include "wehrlflux/errors.hpp"

#ifndef WEHRLFLUX_VERSION
#define WEHRLFLUX_VERSION "0.0.0"
#endif

namespace wehrlflux {

namespace {

std::string num(double v, const char* f = "%.17g") {
    char buf[48];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Metadata run_metadata(const RunConfig& cfg) {
    Metadata m;
    m.emplace_back("generator", std::string("wehrlflux ") + version_string());
    m.emplace_back("schema_version", std::to_string(kResultSchemaVersion));
    m.emplace_back("config_hash", "fnv1a64:" + config_hash(cfg));
    m.emplace_back("model", model_name(cfg.model));
    if (cfg.model == ModelKind::dicke) {
        m.emplace_back("lambda_c", num(critical_coupling(cfg.dicke)));
        m.emplace_back("gamma_over_kappa", num(cfg.dicke.gamma / cfg.dicke.kappa));
        if (cfg.mc_samples > 0) m.emplace_back("mc_seed", std::to_string(cfg.seed));
    } else {
        m.emplace_back("kappa", num(cfg.kerr.kappa));
        m.emplace_back("detuning", num(cfg.kerr.detuning));
        m.emplace_back("nonlinearity", num(cfg.kerr.nonlinearity));
    }
    return m;
}

std::string point_label(const char* name, int N, double v) {
    return "N=" + std::to_string(N) + " " + name + "=" + num(v, "%.10g");
}

}  // namespace

const char* version_string() { return WEHRLFLUX_VERSION; }

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const IoError*>(&e)) return kExitIo;
    if (dynamic_cast<const InvalidArgument*>(&e)) return kExitConfig;
    return kExitNumerical;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("WEHRLFLUX_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0 && v <= 1024) return static_cast<int>(v);
    }
    return 1;
}

ResultRow to_row(const SweepRecord& r, const std::string& model) {
    ResultRow row;
    row.model = model;
    row.N = r.N;
    row.param = r.eps;
    row.S = r.budget.S;
    row.Phi_ext = r.budget.Phi_ext;
    row.Phi_q = r.budget.Phi_q;
    row.Pi_ext = r.budget.Pi_ext();
    row.Pi_u = r.budget.Pi_u;
    row.Pi_d = r.budget.Pi_d;
    row.gap = r.gap;
    row.alpha_re = r.budget.alpha.real();
    row.alpha_im = r.budget.alpha.imag();
    row.residual = r.residual;
    row.n_max_used = r.n_max_used;
    row.wall_time_s = r.wall_time_s;
    return row;
}

ResultRow to_row(const DickePoint& pt) {
    const EntropyBudget& b = pt.result.budget;
    ResultRow row;
    row.model = "dicke";
    row.N = b.N;
    row.param = pt.lambda;
    row.S = b.S;
    row.Phi_ext = b.Phi_ext;
    row.Phi_q = b.Phi_q;
    row.Pi_ext = b.Pi_ext();
    row.Pi_u = b.Pi_u;
    row.Pi_d = b.Pi_d;
    row.alpha_re = b.alpha.real();
    row.alpha_im = b.alpha.imag();
    row.beta = pt.result.beta;
    row.residual = pt.lyapunov_residual;
    return row;
}

RunSummary execute_run(const RunConfig& cfg, int threads) {
    RunSummary sum;
    sum.meta = run_metadata(cfg);
    const std::string model = model_name(cfg.model);
    Journal journal(cfg.output + ".journal", sum.meta, model);

    if (cfg.model == ModelKind::dicke) {
        sum.warnings = cfg.dicke.warnings();
        for (int N : cfg.N_list) {
            for (double lam : cfg.scan) {
                DickeParams p = cfg.dicke;
                p.lambda = lam;
                try {
                    const DickePoint pt = dicke_point(p, N);
                    if (!pt.result.budget.balance_ok) {
                        throw ConvergenceError("Gaussian balance residual " +
                                               num(pt.result.full_balance_residual, "%.3e"));
                    }
                    if (cfg.mc_samples > 0) {
                        const auto mc = monte_carlo_budget(pt.sigma, pt.hp, p, cfg.mc_samples, cfg.seed);
                        const EntropyBudget& b = pt.result.budget;
                        for (auto [est, exact] : {std::pair{mc.S, b.S}, std::pair{mc.Pi_d, b.Pi_d},
                                                  std::pair{mc.Pi_u, b.Pi_u}}) {
                            sum.mc_max_rel_dev = std::max(
                                sum.mc_max_rel_dev, std::abs(est - exact) / std::max(std::abs(exact), 1e-300));
                        }
                    }
                    ResultRow row = to_row(pt);
                    journal.append(row);
                    sum.rows.push_back(row);
                } catch (const NumericalError& e) {
                    sum.failures.push_back(point_label("lambda", N, lam) + ": " + e.what());
                }
            }
        }
    } else {
        SweepOptions so;
        so.threads = threads;
        so.enforce_range = cfg.model == ModelKind::kerr;
        so.point.n_max = cfg.n_max;
        so.point.certify_cutoff = cfg.certify_cutoff;
        so.point.compute_gap = cfg.compute_gap;
        so.point.record_timing = cfg.record_timing;
        so.point.grid.points_per_axis = cfg.points_per_axis;
        so.point.budget.balance_tol = cfg.balance_tol;
        // runs on worker threads, so errors are carried out rather than thrown
        std::string journal_error;
        so.on_record = [&](const SweepRecord& r) {
            if (!r.ok || !r.budget.balance_ok || !journal_error.empty()) return;
            try {
                journal.append(to_row(r, model));
            } catch (const IoError& e) {
                journal_error = e.what();
            }
        };
        const std::vector<int> Ns = cfg.model == ModelKind::cavity ? std::vector<int>{1} : cfg.N_list;
        const auto recs = sweep(cfg.kerr, Ns, cfg.scan, so);
        if (!journal_error.empty()) throw IoError(journal_error);
        for (const auto& r : recs) {
            const std::string label = point_label("eps", r.N, r.eps);
            if (!r.ok) {
                sum.failures.push_back(label + ": " + r.error);
                continue;
            }
            if (!r.budget.balance_ok) {
                sum.failures.push_back(label + ": entropy balance residual " +
                                       num(r.budget.balance_residual, "%.3e") + " exceeds " +
                                       num(cfg.balance_tol, "%g"));
                continue;
            }
            if (cfg.certify_cutoff && !r.cutoff_certified) {
                sum.warnings.push_back(label + ": photon number moved by " +
                                       num(r.cutoff_drift, "%.2e") + " when the cutoff was raised");
            }
            sum.rows.push_back(to_row(r, model));
        }
    }
    std::stable_sort(sum.rows.begin(), sum.rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return a.N != b.N ? a.N < b.N : a.param < b.param;
    });
    write_results(cfg.output, sum.meta, model, sum.rows);
    journal.discard();
    return sum;
}

int run_command(const std::string& config_path, const RunOptions& opts, std::ostream& out,
                std::ostream& err) {
    try {
        const RunConfig cfg = load_config(config_path);
        const RunSummary sum = execute_run(cfg, resolve_threads(opts.threads));
        for (const auto& w : sum.warnings) err << "warning: " << w << '\n';
        for (const auto& f : sum.failures) err << "failed: " << f << '\n';
        out << "wrote " << sum.rows.size() << " rows to " << cfg.output << " (config fnv1a64:"
            << config_hash(cfg) << ")\n";
        if (cfg.model == ModelKind::dicke && cfg.mc_samples > 0) {
            out << "monte-carlo cross-check: largest relative deviation "
                << num(sum.mc_max_rel_dev, "%.3e") << " at " << cfg.mc_samples << " samples\n";
        }
        if (!sum.failures.empty()) {
            out << sum.failures.size() << " point(s) failed\n";
            if (!opts.keep_going) return kExitNumerical;
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << config_path;
        if (e.line() > 0) err << ':' << e.line();
        err << ": " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

int collapse_command(const std::string& results_path, double eps_c, std::ostream& out,
                     std::ostream& err) {
    try {
        const ResultTable t = read_results(results_path);
        if (t.model != "kerr") {
            err << results_path << ": collapse needs kerr results, found '" << t.model << "'\n";
            return kExitConfig;
        }
        std::vector<CollapseInput> in;
        std::set<int> Ns;
        for (const auto& r : t.rows) {
            in.push_back({r.N, r.param, r.Pi_u, r.Pi_d});
            Ns.insert(r.N);
        }
        const CollapseResult c = collapse_transform(in, eps_c);
        out << "# eps_c: " << num(eps_c) << '\n';
        out << "x,Pi_u,Pi_d_over_N,N\n";
        for (const auto& r : c.rows)
            out << num(r.x) << ',' << num(r.Pi_u) << ',' << num(r.Pi_d_over_N) << ',' << r.N << '\n';
        if (Ns.size() < 2) {
            out << "# metric: undefined (fewer than two N values)\n";
            return kExitOk;
        }
        for (const auto& p : c.pairs) {
            out << "# metric N=" << p.N_lo << ".." << p.N_hi << ": ";
            if (!p.defined) {
                out << "undefined (no common x range)\n";
                continue;
            }
            out << num(p.metric, "%.6g") << " (Pi_u " << num(p.spread_pi_u, "%.6g") << ", Pi_d/N "
                << num(p.spread_pi_d, "%.6g") << ") over x in [" << num(p.x_lo, "%.6g") << ", "
                << num(p.x_hi, "%.6g") << "]\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

int fit_divergence_command(const std::string& results_path, const DivergenceWindow& window,
                           std::ostream& out, std::ostream& err) {
    try {
        const ResultTable t = read_results(results_path);
        if (t.model != "dicke") {
            err << results_path << ": fit-divergence needs dicke results, found '" << t.model << "'\n";
            return kExitConfig;
        }
        const std::string lc_text = t.get("lambda_c");
        if (lc_text.empty()) {
            err << results_path << ": no lambda_c in the header\n";
            return kExitConfig;
        }
        const double lc = std::strtod(lc_text.c_str(), nullptr);
        const std::string gk = t.get("gamma_over_kappa");
        const double g_over_k = gk.empty() ? 0.0 : std::strtod(gk.c_str(), nullptr);
        // Pi_d is intensive, one N is enough
        const int N0 = t.rows.empty() ? 0 : t.rows.front().N;
        std::vector<double> lam, pid;
        for (const auto& r : t.rows) {
            if (r.N != N0) continue;
            lam.push_back(r.param);
            pid.push_back(r.Pi_d);
        }
        const DivergenceReport rep = fit_divergence(lam, pid, lc, window, g_over_k);
        for (const auto& w : rep.warnings) err << "warning: " << w << '\n';
        out << "lambda_c: " << num(lc) << '\n';
        out << "window: |lambda/lambda_c - 1| in [" << num(window.lo, "%g") << ", "
            << num(window.hi, "%g") << "]\n";
        auto side = [&](const char* name, const LogLogFit& f) {
            out << name << ": slope " << num(f.slope, "%.6f") << " +- " << num(f.slope_err, "%.6f")
                << " from " << f.points << " points\n";
        };
        side("below", rep.below);
        side("above", rep.above);
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

}  // namespace wehrlflux
