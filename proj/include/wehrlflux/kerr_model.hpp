#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wehrlflux/kerr_params.hpp"
#include "wehrlflux/liouvillian.hpp"
#include "wehrlflux/phase_space.hpp"

namespace wehrlflux {

/// Turning points of the mean-field S-curve. eps_minus and eps_plus are the
/// drives at n_minus and n_plus, so eps_plus < eps_minus for Delta < 0.
struct BistabilityWindow {
    double n_minus = 0.0;
    double n_plus = 0.0;
    double eps_minus = 0.0;
    double eps_plus = 0.0;

    double lower() const { return std::min(eps_minus, eps_plus); }
    double upper() const { return std::max(eps_minus, eps_plus); }
};

/// Empty unless Delta < 0 and Delta^2 >= 3 kappa^2.
std::optional<BistabilityWindow> bistability_window(const KerrParams& p);

/// Non-negative intensive photon numbers on the mean-field curve at drive eps,
/// ascending. Throws ConvergenceError if a root fails the 1e-10 residual check.
std::vector<double> mean_field_curve(const KerrParams& p, double eps);

struct PointOptions {
    CutoffRule cutoff;
    int n_max = 0;  // explicit cutoff; 0 takes it from the rule, below the rule throws
    /// Compare <a^dagger a> at n_max and n_max + certify_extra; on a drift
    /// above drift_tol * max(1, <a^dagger a>) move up by certify_extra, at most
    /// max_escalations times and only while the drift keeps falling tenfold.
    bool certify_cutoff = true;
    int certify_extra = 10;
    double drift_tol = 1e-8;
    int max_escalations = 4;
    bool compute_gap = true;
    int gap_nev = 12;
    AutoGridOptions grid;
    BudgetOptions budget;
    SteadyStateOptions steady;
    bool record_timing = false;
};

struct SweepRecord {
    int N = 0;
    double eps = 0.0;
    EntropyBudget budget;
    double gap = 0.0;
    double n_mean = 0.0;  // <a^dagger a> / N
    double von_neumann = 0.0;
    int n_max_used = 0;
    Complex grid_center;
    double grid_half_width = 0.0;
    int grid_points = 0;
    double residual = 0.0;  // ||L rho||_F
    bool used_direct_solve = false;
    double cutoff_drift = 0.0;
    bool cutoff_certified = true;
    double wall_time_s = 0.0;
    bool ok = true;
    std::string error;
};

/// Steady state, gap, cutoff certification and entropy budget at one point.
SweepRecord solve_point(const KerrParams& p, const PointOptions& opts = {});

struct SweepOptions {
    PointOptions point;
    int threads = 1;
    /// Require eps within [0.5 lower, 1.5 upper] of the window when one exists.
    bool enforce_range = true;
    /// Called once per finished point, serialised, in completion order.
    std::function<void(const SweepRecord&)> on_record;
};

/// One record per (N, eps), sorted by (N, eps). Failed points carry ok = false.
std::vector<SweepRecord> sweep(const KerrParams& base, const std::vector<int>& N_list,
                               const std::vector<double>& eps_grid, const SweepOptions& opts = {});

struct CollapseInput {
    int N;
    double eps;
    double Pi_u;
    double Pi_d;
};

struct CollapseRow {
    int N;
    double eps;
    double x;  // N (eps / eps_c - 1)
    double Pi_u;
    double Pi_d_over_N;
};

struct CollapsePair {
    int N_lo = 0;
    int N_hi = 0;
    bool defined = false;
    double x_lo = 0.0;
    double x_hi = 0.0;
    double spread_pi_u = 0.0;  // max vertical gap / peak |Pi_u|
    double spread_pi_d = 0.0;  // max vertical gap / peak Pi_d/N
    double metric = 0.0;       // larger of the two
};

struct CollapseResult {
    std::vector<CollapseRow> rows;
    std::vector<CollapsePair> pairs;  // consecutive N values
};

CollapseResult collapse_transform(const std::vector<CollapseInput>& records, double eps_c);
CollapseResult collapse_transform(const std::vector<SweepRecord>& records, double eps_c);

struct GapMinimum {
    int N = 0;
    double eps = 0.0;
    double gap = 0.0;
    int evaluations = 0;
};

/// Liouvillian gap minimised over eps in [lo, hi] at fixed N (Brent on log gap).
GapMinimum gap_minimum(const KerrParams& base, int N, double lo, double hi,
                       const CutoffRule& rule = {}, int bits = 24);

struct EpsCEstimate {
    std::vector<GapMinimum> minima;
    double at_largest_N = 0.0;
    /// Intercept of a least-squares fit eps_min(N) = a + b / N.
    double extrapolated = 0.0;
    double slope = 0.0;
};

EpsCEstimate estimate_eps_c(const KerrParams& base, const std::vector<int>& N_list, double lo,
                            double hi, const CutoffRule& rule = {});

/// Alternative estimator: drive maximising d<a^dagger a>/d eps at fixed N.
double susceptibility_peak(const KerrParams& base, int N, double lo, double hi,
                           double step = 1e-4, const CutoffRule& rule = {});

}  // namespace wehrlflux
