#pragma once

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wehrlflux/fock_algebra.hpp"
#include "wehrlflux/kerr_params.hpp"

namespace wehrlflux {

/// Uniform tensor grid over the complex plane with trapezoidal weights for
/// d Re(mu) d Im(mu). Node k = i + P * j sits at center + x_i + i y_j.
struct PhaseSpaceGrid {
    Complex center;
    double half_width = 0.0;
    int points_per_axis = 0;
    std::vector<Complex> nodes;
    std::vector<double> weights;

    int size() const { return static_cast<int>(nodes.size()); }
    double spacing() const { return 2.0 * half_width / (points_per_axis - 1); }
};

inline constexpr int kMinGridPoints = 64;

PhaseSpaceGrid build_grid(Complex center, double half_width, int points_per_axis);

struct HusimiOptions {
    double mass_tol = 1e-6;
    bool check_mass = true;
    int chunk = 1024;  // nodes evaluated per matrix product
};

/// Husimi function and both Wirtinger derivatives on a grid. dQ_dmu is
/// evaluated from rho a^dagger rather than conjugated from dQ_dmubar.
struct PhaseSpaceField {
    PhaseSpaceGrid grid;
    Eigen::ArrayXd Q;
    Eigen::ArrayXcd dQ_dmubar;
    Eigen::ArrayXcd dQ_dmu;
    double mass = 0.0;

    /// kappa ((mu - shift) Q + dQ/dmubar); shift = alpha sqrt(N) gives J^nu.
    Eigen::ArrayXcd current(double kappa, Complex shift) const;
};

PhaseSpaceField husimi_field(const DensityMatrix& rho, const PhaseSpaceGrid& grid,
                             const HusimiOptions& opts = {});

/// Q, dQ/dmubar and dQ/dmu at a single point.
struct HusimiPoint {
    double Q;
    Complex dQ_dmubar;
    Complex dQ_dmu;
};
HusimiPoint husimi_at(const DensityMatrix& rho, Complex mu);

double wehrl_entropy(const PhaseSpaceField& f);

/// 2 kappa <a^dagger a>.
double entropy_flux(const DensityMatrix& rho, double kappa);

struct FluxSplit {
    Complex alpha;   // <a> / sqrt(N)
    double Phi = 0.0;
    double Phi_ext = 0.0;
    double Phi_q = 0.0;
};
FluxSplit flux_split(const DensityMatrix& rho, double kappa, int N);

struct PiDResult {
    double value = 0.0;
    double excluded_mass = 0.0;  // quadrature mass on nodes below the Q floor
};

/// (2/kappa) int |J^nu|^2 / Q with nu = mu - alpha sqrt(N); nodes with
/// Q < q_floor_rel * max Q are skipped.
PiDResult pi_d(const PhaseSpaceField& f, double kappa, Complex alpha, int N,
               double q_floor_rel = 1e-14);

struct PiUResult {
    double value = 0.0;
    double imag_residue = 0.0;
};

/// Kerr unitary production (i u / 2N) int [mu^2 (dQ/dmu)^2 - mubar^2 (dQ/dmubar)^2] / Q.
/// Throws QuadratureFailure when the imaginary residue exceeds 1e-6.
PiUResult pi_u_kerr(const PhaseSpaceField& f, double u, int N, double q_floor_rel = 1e-14);

/// H = N sum h_rs (a^dagger / sqrt N)^r (a / sqrt N)^s with intensive h_rs.
class NormalOrderedHamiltonian {
public:
    using Key = std::pair<int, int>;

    NormalOrderedHamiltonian() = default;
    /// Throws InvalidArgument unless h_rs = conj(h_sr) within tol.
    explicit NormalOrderedHamiltonian(std::map<Key, Complex> coefficients, double tol = 1e-12);

    static NormalOrderedHamiltonian kerr(double detuning, double nonlinearity, double eps);

    const std::map<Key, Complex>& coefficients() const { return h_; }

private:
    std::map<Key, Complex> h_;
};

struct UnitaryGeneratorCoefficients {
    Complex xi1;
    Complex xi2;
    Complex xi11;
};

UnitaryGeneratorCoefficients xi_coefficients(const NormalOrderedHamiltonian& H, Complex alpha);

/// (1/2) int [xi2 (dQ/dnubar)^2 + conj(xi2) (dQ/dnu)^2] / Q.
PiUResult pi_u_leading(const PhaseSpaceField& f, const UnitaryGeneratorCoefficients& xi,
                       double q_floor_rel = 1e-14);

struct EntropyBudget {
    double S = 0.0;
    double dSdt = 0.0;
    double Phi_ext = 0.0;  // also Pi_ext
    double Phi_q = 0.0;
    double Pi_u = 0.0;
    double Pi_d = 0.0;
    Complex alpha;
    int N = 1;

    // diagnostics
    double mass = 0.0;
    double excluded_mass = 0.0;
    double pi_u_imag_residue = 0.0;
    double balance_residual = 0.0;  // |Pi_u + Pi_d - Phi_q| / max(Phi_q, 1e-6 Phi, 1e-12)
    bool balance_ok = true;

    double Pi_ext() const { return Phi_ext; }
    double Phi() const { return Phi_ext + Phi_q; }
    double Pi() const { return Phi_ext + Pi_u + Pi_d; }
};

struct BudgetOptions {
    double balance_tol = 1e-2;
    double q_floor_rel = 1e-14;
    HusimiOptions husimi;
};

/// Sets dSdt = Pi - Phi and the balance diagnostics from the other fields.
void finalize_balance(EntropyBudget& b, double balance_tol);

EntropyBudget entropy_budget(const DensityMatrix& rho, const KerrParams& p,
                             const PhaseSpaceGrid& grid, const BudgetOptions& opts = {});
/// Same, reusing a field already evaluated for rho.
EntropyBudget entropy_budget(const DensityMatrix& rho, const KerrParams& p,
                             const PhaseSpaceField& field, const BudgetOptions& opts = {});

struct AutoGridOptions {
    int points_per_axis = 128;
    double width_factor = 9.0;
    double growth = 1.25;     // half-width factor per retry on a mass deficit
    int max_expansions = 6;
};

/// Grid centred on <a> with half width width_factor * max(1, sqrt(var + 1)).
PhaseSpaceGrid auto_grid(const DensityMatrix& rho, int points_per_axis = 128,
                         double width_factor = 9.0);

/// Husimi field on auto_grid, widening the grid at fixed spacing while the
/// mass falls short.
PhaseSpaceField auto_field(const DensityMatrix& rho, const AutoGridOptions& grid_opts = {},
                           const HusimiOptions& opts = {});

/// entropy_budget on auto_grid, widening the grid at fixed spacing while the
/// Husimi mass falls short.
EntropyBudget entropy_budget_auto(const DensityMatrix& rho, const KerrParams& p,
                                  const AutoGridOptions& grid_opts = {},
                                  const BudgetOptions& opts = {});

}  // namespace wehrlflux
