#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wehrlflux/fock_algebra.hpp"
#include "wehrlflux/phase_space.hpp"

namespace wehrlflux {

/// Driven-dissipative Dicke model in the thermodynamic limit. gamma is the
/// small auxiliary loss on the spin fluctuation mode.
struct DickeParams {
    double omega0 = 0.005;
    double omega = 0.01;
    double kappa = 1.0;
    double lambda = 0.0;
    double gamma = 1e-3;

    /// Throws InvalidArgument unless omega0, omega, kappa, gamma > 0 and lambda >= 0.
    void validate() const;
    /// Non-fatal remarks, e.g. gamma not small compared with kappa.
    std::vector<std::string> warnings() const;
};

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

/// lambda_c = (1/2) sqrt((omega0 / omega)(kappa^2 + omega^2)).
double critical_coupling(const DickeParams& p);

struct MeanFieldState {
    Complex alpha;  // <a> / sqrt(N)
    Complex beta;   // <J_-> / N
    double w = -0.5;  // <J_z> / N
};

/// Time derivatives (alpha', beta', w') of the mean-field equations at s.
struct MeanFieldRates {
    Complex alpha;
    Complex beta;
    double w;
};
MeanFieldRates mean_field_rhs(const MeanFieldState& s, const DickeParams& p);

/// Normal phase below lambda_c, otherwise the ordered branch with beta > 0 and
/// the spin pointing down.
MeanFieldState mean_field_fixed_point(const DickeParams& p);

struct HPCoefficients {
    double beta_tilde_minus = 0.0;
    double beta_tilde_plus = 1.0;
    double omega0_tilde = 0.0;
    double lambda_tilde = 0.0;
    double zeta = 0.0;
};

/// Throws SingularBranch when |beta| > 1/2 or the branch has beta_tilde_plus = 0.
HPCoefficients hp_coefficients(const MeanFieldState& mf, const DickeParams& p);

/// Quadrature ordering r = (q_b, p_b, q_a, p_a), vacuum covariance I/2.
struct DriftDiffusion {
    Mat4 A;    // full drift including the losses
    Mat4 D;    // diag(gamma, gamma, kappa, kappa)
    Mat4 A_u;  // Hamiltonian part of A
};
DriftDiffusion drift_diffusion(const HPCoefficients& hp, const DickeParams& p);

struct LyapunovOptions {
    double hurwitz_margin = 1e-12;
    double residual_tol = 1e-10;   // relative to max(1, |A| |sigma|)
    double physicality_tol = 1e-9;
};

/// Solves A sigma + sigma A^T + D = 0 through the 16 x 16 Kronecker system.
/// Throws UnstableSystem for non-Hurwitz A, ConvergenceError on a residual
/// failure and InvalidCovariance when sigma + i Omega / 2 is not PSD.
Mat4 solve_lyapunov(const Mat4& A, const Mat4& D, const LyapunovOptions& opts = {});

/// Smallest eigenvalue of sigma + i Omega / 2.
double uncertainty_margin(const Mat4& sigma);

struct DickeBudget {
    EntropyBudget budget;  // a-channel headline values
    double Pi_d_b = 0.0;   // spin-loss channel
    double Phi_q_b = 0.0;
    double beta = 0.0;
    /// |Pi_u + Pi_d + Pi_d_b - Phi_q - Phi_q_b| / (Phi_q + Phi_q_b)
    double full_balance_residual = 0.0;
};

/// Closed-form Gaussian Husimi budget. Throws InvalidCovariance unless
/// sigma + I/2 is positive definite.
DickeBudget gaussian_budget(const Mat4& sigma, const HPCoefficients& hp, const DickeParams& p,
                            const MeanFieldState& mf, int N);

struct DickePoint {
    double lambda = 0.0;
    MeanFieldState mf;
    HPCoefficients hp;
    DriftDiffusion dd;
    Mat4 sigma;
    double lyapunov_residual = 0.0;
    DickeBudget result;
};

/// Whole pipeline at p.lambda.
DickePoint dicke_point(const DickeParams& p, int N = 1);

/// Monte-Carlo estimates of the defining phase-space integrals, sampling the
/// Gaussian Husimi function. Reproducible for a given seed.
struct MonteCarloEstimate {
    double S = 0.0;
    double Pi_d = 0.0;
    double Pi_u = 0.0;
    double S_err = 0.0;  // standard errors
    double Pi_d_err = 0.0;
    double Pi_u_err = 0.0;
    std::int64_t samples = 0;
};
MonteCarloEstimate monte_carlo_budget(const Mat4& sigma, const HPCoefficients& hp,
                                      const DickeParams& p, std::int64_t samples,
                                      std::uint64_t seed);

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_err = 0.0;
    int points = 0;
};

/// Least squares of log10 y against log10 x. Throws InsufficientPoints below
/// min_points and InvalidArgument on non-positive data.
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                     int min_points = 5);

/// Fit window in relative distance d = |lambda / lambda_c - 1|.
struct DivergenceWindow {
    double lo = 0.01;
    double hi = 0.10;
};

struct DivergenceReport {
    double lambda_c = 0.0;
    DivergenceWindow window;
    LogLogFit below;
    LogLogFit above;
    std::vector<std::string> warnings;
};

/// Slopes of log Pi_d against log |lambda_c - lambda| on each side, using the
/// (lambda, Pi_d) pairs whose relative distance lies inside the window.
DivergenceReport fit_divergence(const std::vector<double>& lambda, const std::vector<double>& Pi_d,
                                double lambda_c, const DivergenceWindow& window, double gamma_over_kappa = 0.0);

/// Evaluates the pipeline on lambda_grid and fits both sides.
DivergenceReport divergence_scan(const DickeParams& p_base, const std::vector<double>& lambda_grid,
                                 const DivergenceWindow& window = {});

/// Log-spaced grid of n points per side with relative distance in [lo, hi].
std::vector<double> divergence_grid(const DickeParams& p_base, const DivergenceWindow& window,
                                    int n_per_side = 25);

struct KinkReport {
    double lambda_c = 0.0;
    double left_slope = 0.0;
    double right_slope = 0.0;
    double noise_floor = 0.0;  // combined finite-difference error of both slopes
    double jump = 0.0;         // |left - right extrapolation to lambda_c|
    double resolution = 0.0;   // largest Pi_u step between neighbouring nodes
    double max_abs_pi_u = 0.0;
    double max_pi_d = 0.0;

    bool kink() const { return std::abs(left_slope - right_slope) > 10.0 * noise_floor; }
    bool continuous() const { return jump < resolution; }
};

/// One-sided slopes of Pi_u at lambda_c from the grid nodes nearest to it.
/// lambda_grid must contain lambda_c and at least two nodes on each side.
KinkReport kink_detector(const DickeParams& p_base, const std::vector<double>& lambda_grid);

}  // namespace wehrlflux
