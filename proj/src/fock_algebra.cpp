#include "wehrlflux/fock_algebra.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "wehrlflux/errors.hpp"

namespace wehrlflux {

namespace {

void require_dim(int n_max) {
    if (n_max < 2) {
        throw InvalidDimension("Fock cutoff must be at least 2, got " + std::to_string(n_max));
    }
}

void require_same_dim(int a, int b) {
    if (a != b) {
        throw DimensionMismatch("operator dimensions differ: " + std::to_string(a) + " vs " +
                                std::to_string(b));
    }
}

}  // namespace

FockOperator::FockOperator(CMatrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) {
        throw DimensionMismatch("Fock operator must be square");
    }
    require_dim(static_cast<int>(entries_.rows()));
    if (!entries_.allFinite()) {
        throw InvalidArgument("Fock operator has non-finite entries");
    }
}

FockOperator FockOperator::adjoint() const { return FockOperator(entries_.adjoint()); }

bool FockOperator::is_hermitian(double tol) const {
    return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

FockOperator operator*(const FockOperator& lhs, const FockOperator& rhs) {
    require_same_dim(lhs.dim(), rhs.dim());
    return FockOperator(lhs.entries_ * rhs.entries_);
}

FockOperator operator+(const FockOperator& lhs, const FockOperator& rhs) {
    require_same_dim(lhs.dim(), rhs.dim());
    return FockOperator(lhs.entries_ + rhs.entries_);
}

FockOperator operator-(const FockOperator& lhs, const FockOperator& rhs) {
    require_same_dim(lhs.dim(), rhs.dim());
    return FockOperator(lhs.entries_ - rhs.entries_);
}

FockOperator operator*(Complex scale, const FockOperator& op) {
    return FockOperator(scale * op.entries_);
}

DensityMatrix::DensityMatrix(CMatrix entries, const DensityTolerances& tol)
    : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) {
        throw DimensionMismatch("density matrix must be square");
    }
    require_dim(static_cast<int>(entries_.rows()));
    if (!entries_.allFinite()) {
        throw InvalidArgument("density matrix has non-finite entries");
    }
    const double herm = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol.hermiticity) {
        throw InvalidArgument("density matrix is not Hermitian (defect " + std::to_string(herm) +
                              ")");
    }
    const Complex tr = entries_.trace();
    if (std::abs(tr - 1.0) > tol.trace) {
        throw InvalidArgument("density matrix trace deviates from 1 by " +
                              std::to_string(std::abs(tr - 1.0)));
    }
    // Eigenvalues of the exactly Hermitian part.
    const CMatrix herm_part = 0.5 * (entries_ + entries_.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm_part, Eigen::EigenvaluesOnly);
    eigenvalues_ = solver.eigenvalues();
    if (eigenvalues_(0) < -tol.positivity) {
        throw InvalidArgument("density matrix has negative eigenvalue " +
                              std::to_string(eigenvalues_(0)));
    }
}

DensityMatrix DensityMatrix::fock(int n_max, int level) {
    require_dim(n_max);
    if (level < 0 || level >= n_max) {
        throw InvalidArgument("Fock level outside the truncated space");
    }
    CMatrix m = CMatrix::Zero(n_max, n_max);
    m(level, level) = 1.0;
    return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::pure(const CVector& psi) {
    const double norm2 = psi.squaredNorm();
    if (!(norm2 > 0.0)) {
        throw InvalidArgument("cannot build a pure state from a zero vector");
    }
    return DensityMatrix(psi * psi.adjoint() / norm2);
}

DensityMatrix DensityMatrix::thermal(double mean_photons, int n_max) {
    require_dim(n_max);
    if (!(mean_photons >= 0.0)) {
        throw InvalidArgument("thermal occupation must be non-negative");
    }
    CMatrix m = CMatrix::Zero(n_max, n_max);
    const double ratio = mean_photons / (1.0 + mean_photons);
    double p = 1.0;
    double total = 0.0;
    for (int n = 0; n < n_max; ++n) {
        m(n, n) = p;
        total += p;
        p *= ratio;
    }
    m /= total;
    return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(int n_max) {
    require_dim(n_max);
    return DensityMatrix(CMatrix::Identity(n_max, n_max) / static_cast<double>(n_max));
}

FockOperator annihilation(int n_max) {
    require_dim(n_max);
    CMatrix a = CMatrix::Zero(n_max, n_max);
    for (int n = 1; n < n_max; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return FockOperator(std::move(a));
}

FockOperator creation(int n_max) { return annihilation(n_max).adjoint(); }

FockOperator number_operator(int n_max) {
    require_dim(n_max);
    CMatrix n = CMatrix::Zero(n_max, n_max);
    for (int k = 0; k < n_max; ++k) {
        n(k, k) = static_cast<double>(k);
    }
    return FockOperator(std::move(n));
}

FockOperator identity_operator(int n_max) {
    require_dim(n_max);
    return FockOperator(CMatrix::Identity(n_max, n_max));
}

std::vector<double> log_factorials(int n_max) {
    std::vector<double> lf(static_cast<std::size_t>(std::max(n_max, 1)), 0.0);
    for (int n = 1; n < n_max; ++n) {
        lf[n] = lf[n - 1] + std::log(static_cast<double>(n));
    }
    return lf;
}

CVector coherent_components(Complex mu, const std::vector<double>& log_fact) {
    const int n_max = static_cast<int>(log_fact.size());
    CVector c = CVector::Zero(n_max);
    const double r = std::abs(mu);
    if (r == 0.0) {
        c(0) = 1.0;
        return c;
    }
    const double log_r = std::log(r);
    const double half_r2 = 0.5 * r * r;
    const Complex step = mu / r;
    Complex phase = 1.0;
    for (int n = 0; n < n_max; ++n) {
        const double log_mag = n * log_r - 0.5 * log_fact[n] - half_r2;
        c(n) = std::exp(log_mag) * phase;
        phase *= step;
    }
    return c;
}

CVector coherent_components(Complex mu, int n_max) {
    require_dim(n_max);
    return coherent_components(mu, log_factorials(n_max));
}

CoherentStateVector coherent_state(Complex mu, int n_max, const CoherentStateOptions& opts) {
    require_dim(n_max);
    const double occupation = std::norm(mu);
    if (occupation > opts.adequacy_ratio * n_max) {
        const int required = static_cast<int>(std::ceil(occupation / opts.adequacy_ratio));
        throw TruncationInadequate("coherent amplitude |mu|^2 = " + std::to_string(occupation) +
                                       " too large for n_max = " + std::to_string(n_max),
                                   required);
    }
    CoherentStateVector state{mu, coherent_components(mu, n_max)};
    if (state.leakage() > opts.leakage_bound) {
        throw TruncationInadequate("coherent state leakage exceeds bound",
                                   n_max + static_cast<int>(std::ceil(5.0 * std::sqrt(occupation))));
    }
    return state;
}

Complex expectation(const DensityMatrix& rho, const FockOperator& op) {
    require_same_dim(rho.dim(), op.dim());
    // tr(rho O) = sum_ij rho_ij O_ji
    const Complex value = rho.matrix().cwiseProduct(op.matrix().transpose()).sum();
    if (op.is_hermitian() && std::abs(value.imag()) > 1e-10 * std::max(1.0, std::abs(value))) {
        throw NumericalError("expectation of a Hermitian operator has imaginary part " +
                             std::to_string(value.imag()));
    }
    return value;
}

double von_neumann_entropy(const DensityMatrix& rho) {
    double s = 0.0;
    for (double p : rho.eigenvalues()) {
        if (p > 0.0) {
            s -= p * std::log(p);
        }
    }
    return s;
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    require_same_dim(rho.dim(), sigma.dim());
    const CMatrix diff = rho.matrix() - sigma.matrix();
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (diff + diff.adjoint()),
                                                  Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

int fock_cutoff(int N, double intensive_photons, const CutoffRule& rule) {
    if (N < 1) {
        throw InvalidArgument("N must be positive");
    }
    if (!(intensive_photons >= 0.0) || !std::isfinite(intensive_photons)) {
        throw InvalidArgument("photon number for the cutoff rule must be finite and non-negative");
    }
    const double extensive = N * intensive_photons;
    const int n = static_cast<int>(std::ceil(rule.c1 * extensive + rule.c2 * std::sqrt(extensive)));
    return std::max(n, std::max(rule.minimum, 2));
}

}  // namespace wehrlflux
