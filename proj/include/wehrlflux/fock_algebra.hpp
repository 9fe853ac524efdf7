#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace wehrlflux {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// A single-mode operator on the truncated Fock space {|0>, ..., |dim-1>}.
class FockOperator {
public:
    explicit FockOperator(CMatrix entries);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const CMatrix& matrix() const { return entries_; }
    Complex operator()(int row, int col) const { return entries_(row, col); }

    FockOperator adjoint() const;
    bool is_hermitian(double tol = 1e-12) const;

    friend FockOperator operator*(const FockOperator& lhs, const FockOperator& rhs);
    friend FockOperator operator+(const FockOperator& lhs, const FockOperator& rhs);
    friend FockOperator operator-(const FockOperator& lhs, const FockOperator& rhs);
    friend FockOperator operator*(Complex scale, const FockOperator& op);

private:
    CMatrix entries_;
};

struct DensityTolerances {
    double hermiticity = 1e-10;  // max |rho - rho^dagger| elementwise
    double trace = 1e-10;
    double positivity = 1e-8;    // smallest eigenvalue >= -positivity
};

/// A validated state: Hermitian, unit trace and positive up to truncation noise.
class DensityMatrix {
public:
    explicit DensityMatrix(CMatrix entries, const DensityTolerances& tol = {});

    static DensityMatrix fock(int n_max, int level);
    /// |psi><psi| / <psi|psi>.
    static DensityMatrix pure(const CVector& psi);
    /// Geometric photon distribution with mean `mean_photons`, truncated and renormalised.
    static DensityMatrix thermal(double mean_photons, int n_max);
    static DensityMatrix maximally_mixed(int n_max);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const CMatrix& matrix() const { return entries_; }
    /// Eigenvalues in ascending order.
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    double min_eigenvalue() const { return eigenvalues_(0); }

private:
    CMatrix entries_;
    Eigen::VectorXd eigenvalues_;
};

/// Truncated coherent state |mu> projected on the first `dim` Fock levels.
struct CoherentStateVector {
    Complex amplitude;
    CVector components;

    int dim() const { return static_cast<int>(components.size()); }
    double norm() const { return components.norm(); }
    /// Probability weight lost to truncation, 1 - norm^2.
    double leakage() const { return 1.0 - components.squaredNorm(); }
};

struct CoherentStateOptions {
    /// |mu|^2 must not exceed adequacy_ratio * n_max.
    double adequacy_ratio = 0.5;
    /// Upper bound on 1 - norm^2; the default disables the check.
    double leakage_bound = 1.0;
};

FockOperator annihilation(int n_max);
FockOperator creation(int n_max);
FockOperator number_operator(int n_max);
FockOperator identity_operator(int n_max);

/// ln(n!) for n = 0..n_max-1, accumulated as a running sum of logarithms.
std::vector<double> log_factorials(int n_max);

/// Components e^{-|mu|^2/2} mu^n / sqrt(n!) for n < n_max, without any
/// adequacy guard. Magnitudes are formed in log space so that large |mu|
/// underflows gracefully instead of overflowing.
CVector coherent_components(Complex mu, int n_max);
CVector coherent_components(Complex mu, const std::vector<double>& log_fact);

CoherentStateVector coherent_state(Complex mu, int n_max, const CoherentStateOptions& opts = {});

/// tr(rho O).
Complex expectation(const DensityMatrix& rho, const FockOperator& op);

double von_neumann_entropy(const DensityMatrix& rho);
/// (1/2) || rho - sigma ||_1.
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

struct CutoffRule {
    double c1 = 1.5;
    double c2 = 5.0;
    int minimum = 10;
};

/// ceil(c1 * N * n + c2 * sqrt(N * n)) for intensive photon number n, never
/// below rule.minimum.
int fock_cutoff(int N, double intensive_photons, const CutoffRule& rule = {});

}  // namespace wehrlflux
