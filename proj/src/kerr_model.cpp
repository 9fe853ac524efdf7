#include "wehrlflux/kerr_model.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include <boost/math/tools/minima.hpp>

#include "wehrlflux/errors.hpp"

namespace wehrlflux {

namespace {

double mean_photons(const DensityMatrix& rho) {
    return expectation(rho, number_operator(rho.dim())).real();
}

KerrParams with(const KerrParams& base, int N, double eps) {
    KerrParams p = base;
    p.N = N;
    p.eps = eps;
    return p;
}

// Linear interpolation of (xs, ys) at x; xs ascending.
double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return ys.front();
    if (it == xs.end()) return ys.back();
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

}  // namespace

std::optional<BistabilityWindow> bistability_window(const KerrParams& p) {
    p.validate();
    if (p.detuning >= 0.0) return std::nullopt;
    double disc = p.detuning * p.detuning - 3.0 * p.kappa * p.kappa;
    // the cusp itself should survive roundoff
    if (disc < 0.0 && disc > -1e-12 * p.detuning * p.detuning) disc = 0.0;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    BistabilityWindow w;
    w.n_minus = (-2.0 * p.detuning - root) / (3.0 * p.nonlinearity);
    w.n_plus = (-2.0 * p.detuning + root) / (3.0 * p.nonlinearity);
    w.eps_minus = kerr_drive_at(p.detuning, p.nonlinearity, p.kappa, w.n_minus);
    w.eps_plus = kerr_drive_at(p.detuning, p.nonlinearity, p.kappa, w.n_plus);
    return w;
}

std::vector<double> mean_field_curve(const KerrParams& p, double eps) {
    p.validate();
    require_finite(eps, "eps");
    if (eps < 0.0) throw InvalidArgument("eps must be non-negative");
    std::vector<double> roots = kerr_mean_field_photons(p.detuning, p.nonlinearity, p.kappa, eps);
    const double scale = std::max(1.0, eps * eps);
    for (double& n : roots) {
        auto f = [&](double x) {
            const double s = p.detuning + p.nonlinearity * x;
            return x * (s * s + p.kappa * p.kappa) - eps * eps;
        };
        // one Newton polish step where the slope is usable
        const double s = p.detuning + p.nonlinearity * n;
        const double df = s * s + p.kappa * p.kappa + 2.0 * p.nonlinearity * n * s;
        if (std::abs(df) > 1e-8) {
            const double polished = n - f(n) / df;
            if (polished >= 0.0 && std::abs(f(polished)) < std::abs(f(n))) n = polished;
        }
        if (std::abs(f(n)) > 1e-10 * scale) {
            throw ConvergenceError("mean-field root failed the residual check");
        }
    }
    return roots;
}

SweepRecord solve_point(const KerrParams& p, const PointOptions& opts) {
    p.validate();
    const auto t0 = std::chrono::steady_clock::now();
    SweepRecord rec;
    rec.N = p.N;
    rec.eps = p.eps;

    int n = opts.n_max > 0 ? opts.n_max : kerr_required_cutoff(p, opts.cutoff);
    auto L = std::make_unique<Superoperator>(build_kerr_liouvillian(p, n, true, opts.cutoff));
    auto solver = std::make_unique<LiouvillianSolver>(*L, opts.steady);
    double photons = mean_photons(*solver->steady_state().rho);

    if (opts.certify_cutoff) {
        // Raise the cutoff while that keeps paying off. A drift that does not
        // shrink comes from conditioning near a closing gap, not truncation.
        double previous = std::numeric_limits<double>::infinity();
        for (int step = 0;; ++step) {
            const int n2 = n + opts.certify_extra;
            auto L2 = std::make_unique<Superoperator>(build_kerr_liouvillian(p, n2, true, opts.cutoff));
            auto solver2 = std::make_unique<LiouvillianSolver>(*L2, opts.steady);
            const double photons2 = mean_photons(*solver2->steady_state().rho);
            rec.cutoff_drift = std::abs(photons2 - photons);
            rec.cutoff_certified = rec.cutoff_drift <= opts.drift_tol * std::max(1.0, photons);
            if (rec.cutoff_certified || step >= opts.max_escalations ||
                rec.cutoff_drift > 0.1 * previous) {
                break;
            }
            previous = rec.cutoff_drift;
            n = n2;
            solver = std::move(solver2);
            L = std::move(L2);
            photons = photons2;
        }
    }

    rec.n_max_used = n;
    const SteadyStateResult& ss = solver->steady_state();
    rec.residual = ss.residual;
    rec.used_direct_solve = ss.used_direct_solve;
    // the gap also probes for a degenerate null space
    rec.gap = opts.compute_gap ? solver->gap(opts.gap_nev).gap
                               : std::numeric_limits<double>::quiet_NaN();
    rec.n_mean = photons / p.N;
    rec.von_neumann = von_neumann_entropy(*ss.rho);

    const PhaseSpaceField field = auto_field(*ss.rho, opts.grid, opts.budget.husimi);
    rec.grid_center = field.grid.center;
    rec.grid_half_width = field.grid.half_width;
    rec.grid_points = field.grid.points_per_axis;
    rec.budget = entropy_budget(*ss.rho, p, field, opts.budget);

    if (opts.record_timing) {
        rec.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return rec;
}

std::vector<SweepRecord> sweep(const KerrParams& base, const std::vector<int>& N_list,
                               const std::vector<double>& eps_grid, const SweepOptions& opts) {
    base.validate();
    if (opts.enforce_range) {
        KerrParams probe = base;
        probe.eps = 0.0;
        if (auto w = bistability_window(probe)) {
            for (double e : eps_grid) {
                if (e < 0.5 * w->lower() || e > 1.5 * w->upper()) {
                    throw InvalidArgument("sweep drive " + std::to_string(e) +
                                          " outside [0.5 eps_lower, 1.5 eps_upper]");
                }
            }
        }
    }
    std::vector<std::pair<int, double>> jobs;
    for (int N : N_list)
        for (double e : eps_grid) jobs.emplace_back(N, e);
    std::sort(jobs.begin(), jobs.end());
    jobs.erase(std::unique(jobs.begin(), jobs.end()), jobs.end());

    std::vector<SweepRecord> out(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex callback_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const KerrParams p = with(base, jobs[i].first, jobs[i].second);
            SweepRecord rec;
            try {
                rec = solve_point(p, opts.point);
            } catch (const std::exception& e) {
                rec = SweepRecord{};
                rec.N = p.N;
                rec.eps = p.eps;
                rec.ok = false;
                rec.error = e.what();
            }
            out[i] = rec;
            if (opts.on_record) {
                std::lock_guard<std::mutex> lock(callback_mutex);
                opts.on_record(out[i]);
            }
        }
    };
    const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(jobs.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return out;
}

CollapseResult collapse_transform(const std::vector<CollapseInput>& records, double eps_c) {
    require_finite(eps_c, "eps_c");
    if (!(eps_c > 0.0)) throw InvalidArgument("eps_c must be positive");
    CollapseResult res;
    std::map<int, std::vector<CollapseRow>> curves;
    for (const auto& r : records) {
        const CollapseRow row{r.N, r.eps, r.N * (r.eps / eps_c - 1.0), r.Pi_u, r.Pi_d / r.N};
        curves[r.N].push_back(row);
    }
    for (auto& [N, rows] : curves) {
        std::sort(rows.begin(), rows.end(),
                  [](const CollapseRow& a, const CollapseRow& b) { return a.x < b.x; });
        res.rows.insert(res.rows.end(), rows.begin(), rows.end());
    }
    if (curves.size() < 2) return res;

    auto extract = [](const std::vector<CollapseRow>& rows, auto member) {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r.*member);
        return v;
    };
    for (auto it = curves.begin(); std::next(it) != curves.end(); ++it) {
        const auto& A = it->second;
        const auto& B = std::next(it)->second;
        CollapsePair pair;
        pair.N_lo = it->first;
        pair.N_hi = std::next(it)->first;
        const auto xa = extract(A, &CollapseRow::x);
        const auto xb = extract(B, &CollapseRow::x);
        pair.x_lo = std::max(xa.front(), xb.front());
        pair.x_hi = std::min(xa.back(), xb.back());
        pair.defined = A.size() >= 2 && B.size() >= 2 && pair.x_hi > pair.x_lo;
        if (pair.defined) {
            std::vector<double> xs;
            for (double x : xa)
                if (x >= pair.x_lo && x <= pair.x_hi) xs.push_back(x);
            for (double x : xb)
                if (x >= pair.x_lo && x <= pair.x_hi) xs.push_back(x);
            xs.push_back(pair.x_lo);
            xs.push_back(pair.x_hi);
            const auto ua = extract(A, &CollapseRow::Pi_u), ub = extract(B, &CollapseRow::Pi_u);
            const auto da = extract(A, &CollapseRow::Pi_d_over_N),
                       db = extract(B, &CollapseRow::Pi_d_over_N);
            double su = 0.0, sd = 0.0;
            for (double x : xs) {
                su = std::max(su, std::abs(interp(xa, ua, x) - interp(xb, ub, x)));
                sd = std::max(sd, std::abs(interp(xa, da, x) - interp(xb, db, x)));
            }
            double pu = 0.0, pd = 0.0;
            for (double v : ua) pu = std::max(pu, std::abs(v));
            for (double v : ub) pu = std::max(pu, std::abs(v));
            for (double v : da) pd = std::max(pd, std::abs(v));
            for (double v : db) pd = std::max(pd, std::abs(v));
            pair.spread_pi_u = pu > 0.0 ? su / pu : 0.0;
            pair.spread_pi_d = pd > 0.0 ? sd / pd : 0.0;
            pair.metric = std::max(pair.spread_pi_u, pair.spread_pi_d);
        }
        res.pairs.push_back(pair);
    }
    return res;
}

CollapseResult collapse_transform(const std::vector<SweepRecord>& records, double eps_c) {
    std::vector<CollapseInput> in;
    for (const auto& r : records) {
        if (r.ok) in.push_back({r.N, r.eps, r.budget.Pi_u, r.budget.Pi_d});
    }
    return collapse_transform(in, eps_c);
}

GapMinimum gap_minimum(const KerrParams& base, int N, double lo, double hi, const CutoffRule& rule,
                       int bits) {
    if (!(lo < hi)) throw InvalidArgument("gap search needs lo < hi");
    GapMinimum gm;
    gm.N = N;
    auto log_gap = [&](double eps) {
        ++gm.evaluations;
        const KerrParams p = with(base, N, eps);
        const Superoperator L = build_kerr_liouvillian(p, kerr_required_cutoff(p, rule), true, rule);
        LiouvillianSolver solver(L);
        return std::log(solver.gap().gap);
    };
    std::uintmax_t iters = 100;
    const auto r = boost::math::tools::brent_find_minima(log_gap, lo, hi, bits, iters);
    gm.eps = r.first;
    gm.gap = std::exp(r.second);
    return gm;
}

EpsCEstimate estimate_eps_c(const KerrParams& base, const std::vector<int>& N_list, double lo,
                            double hi, const CutoffRule& rule) {
    if (N_list.empty()) throw InvalidArgument("need at least one N");
    std::vector<int> Ns = N_list;
    std::sort(Ns.begin(), Ns.end());
    EpsCEstimate est;
    for (int N : Ns) est.minima.push_back(gap_minimum(base, N, lo, hi, rule));
    est.at_largest_N = est.minima.back().eps;
    if (Ns.size() == 1) {
        est.extrapolated = est.at_largest_N;
        return est;
    }
    // least squares in 1/N
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(Ns.size());
    for (const auto& g : est.minima) {
        const double x = 1.0 / g.N;
        sx += x;
        sy += g.eps;
        sxx += x * x;
        sxy += x * g.eps;
    }
    est.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    est.extrapolated = (sy - est.slope * sx) / m;
    return est;
}

double susceptibility_peak(const KerrParams& base, int N, double lo, double hi, double step,
                           const CutoffRule& rule) {
    auto photons = [&](double eps) {
        const KerrParams p = with(base, N, eps);
        const Superoperator L = build_kerr_liouvillian(p, kerr_required_cutoff(p, rule), true, rule);
        SteadyStateOptions so;
        so.check_degeneracy = false;
        return mean_photons(*steady_state(L, so).rho) / N;
    };
    auto neg_slope = [&](double eps) {
        return -(photons(eps + step) - photons(eps - step)) / (2.0 * step);
    };
    std::uintmax_t iters = 100;
    return boost::math::tools::brent_find_minima(neg_slope, lo, hi, 20, iters).first;
}

}  // namespace wehrlflux
