#include "wehrlflux/liouvillian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include <Eigen/SparseLU>

#include "wehrlflux/arnoldi.hpp"
#include "wehrlflux/errors.hpp"

namespace wehrlflux {

namespace {

using Triplet = Eigen::Triplet<Complex>;

// Appends coef * (A kron B) with A acting on the column (outer) index.
void add_kron(std::vector<Triplet>& out, Complex coef, const CMatrix& A, const CMatrix& B) {
    const int n = static_cast<int>(A.rows());
    for (int q = 0; q < n; ++q) {
        for (int p = 0; p < n; ++p) {
            const Complex a = A(p, q);
            if (a == 0.0) continue;
            for (int s = 0; s < n; ++s) {
                for (int r = 0; r < n; ++r) {
                    const Complex b = B(r, s);
                    if (b == 0.0) continue;
                    out.emplace_back(p * n + r, q * n + s, coef * a * b);
                }
            }
        }
    }
}

Complex vec_trace(const CVector& v, int n) {
    Complex t = 0.0;
    for (int k = 0; k < n; ++k) t += v(k * (n + 1));
    return t;
}

}  // namespace

Superoperator::Superoperator(int n_max, SparseCMatrix entries)
    : n_max_(n_max), entries_(std::move(entries)) {
    if (n_max_ < 2) throw InvalidDimension("superoperator cutoff must be at least 2");
    if (entries_.rows() != dim() || entries_.cols() != dim()) {
        throw DimensionMismatch("superoperator must be n_max^2 square");
    }
    entries_.makeCompressed();
    for (int k = 0; k < entries_.nonZeros(); ++k) {
        const Complex z = entries_.valuePtr()[k];
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw InvalidArgument("superoperator has non-finite entries");
        }
    }
}

CMatrix Superoperator::apply(const CMatrix& rho) const {
    if (rho.rows() != n_max_ || rho.cols() != n_max_) {
        throw DimensionMismatch("matrix does not match superoperator cutoff");
    }
    return unvectorize(entries_ * vectorize(rho), n_max_);
}

double Superoperator::trace_preservation_defect() const {
    Eigen::VectorXcd col_sums = Eigen::VectorXcd::Zero(dim());
    for (int col = 0; col < entries_.outerSize(); ++col) {
        for (SparseCMatrix::InnerIterator it(entries_, col); it; ++it) {
            if (it.row() % (n_max_ + 1) == 0) col_sums(col) += it.value();
        }
    }
    return col_sums.cwiseAbs().maxCoeff();
}

double Superoperator::gershgorin_bound() const {
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(dim());
    for (int col = 0; col < entries_.outerSize(); ++col) {
        for (SparseCMatrix::InnerIterator it(entries_, col); it; ++it) {
            row_sums(it.row()) += std::abs(it.value());
        }
    }
    return row_sums.maxCoeff();
}

CVector vectorize(const CMatrix& rho) {
    return Eigen::Map<const CVector>(rho.data(), rho.size());
}

CMatrix unvectorize(const CVector& v, int n_max) {
    if (v.size() != static_cast<Eigen::Index>(n_max) * n_max) {
        throw DimensionMismatch("vector length is not n_max^2");
    }
    return Eigen::Map<const CMatrix>(v.data(), n_max, n_max);
}

Superoperator build_lindblad(const FockOperator& hamiltonian, const FockOperator& jump, double rate) {
    if (hamiltonian.dim() != jump.dim()) throw DimensionMismatch("H and jump operator differ in size");
    require_finite(rate, "rate");
    if (rate < 0.0) throw InvalidArgument("dissipation rate must be non-negative");
    const int n = hamiltonian.dim();
    const CMatrix id = CMatrix::Identity(n, n);
    const CMatrix& H = hamiltonian.matrix();
    const CMatrix& J = jump.matrix();
    const CMatrix JdJ = J.adjoint() * J;
    const Complex I(0.0, 1.0);

    std::vector<Triplet> t;
    add_kron(t, -I, id, H);
    add_kron(t, I, H.transpose(), id);
    if (rate > 0.0) {
        add_kron(t, rate, J.conjugate(), J);
        add_kron(t, -0.5 * rate, id, JdJ);
        add_kron(t, -0.5 * rate, JdJ.transpose(), id);
    }
    SparseCMatrix L(n * n, n * n);
    L.setFromTriplets(t.begin(), t.end());
    L.prune(Complex(0.0));
    return Superoperator(n, std::move(L));
}

FockOperator kerr_hamiltonian(const KerrParams& p, int n_max) {
    p.validate();
    const FockOperator a = annihilation(n_max);
    const FockOperator ad = a.adjoint();
    const Complex I(0.0, 1.0);
    const double N = static_cast<double>(p.N);
    return Complex(p.detuning) * (ad * a) +
           Complex(p.nonlinearity / (2.0 * N)) * (ad * ad * a * a) +
           (I * p.drive()) * (ad - a);
}

Superoperator build_kerr_liouvillian(const KerrParams& p, int n_max, bool check_cutoff,
                                     const CutoffRule& rule) {
    p.validate();
    if (check_cutoff) {
        const int required = kerr_required_cutoff(p, rule);
        if (n_max < required) {
            throw TruncationInadequate("n_max = " + std::to_string(n_max) +
                                           " is below the cutoff rule (" +
                                           std::to_string(required) + ")",
                                       required);
        }
    }
    return build_lindblad(kerr_hamiltonian(p, n_max), annihilation(n_max), 2.0 * p.kappa);
}

struct LiouvillianSolver::Impl {
    const Superoperator& L;
    SteadyStateOptions opts;
    Eigen::SparseLU<SparseCMatrix, Eigen::COLAMDOrdering<int>> lu;
    SteadyStateResult ss;
    bool have_ss = false;

    Impl(const Superoperator& op, const SteadyStateOptions& o) : L(op), opts(o) {
        SparseCMatrix shifted = L.matrix();
        SparseCMatrix id(L.dim(), L.dim());
        id.setIdentity();
        shifted -= Complex(opts.shift) * id;
        shifted.makeCompressed();
        lu.compute(shifted);
        if (lu.info() != Eigen::Success) {
            throw ConvergenceError("sparse LU of the shifted Liouvillian failed");
        }
    }

    // Hermitise, normalise and measure the residual.
    std::pair<CMatrix, double> finish(const CVector& v) const {
        const int n = L.n_max();
        CMatrix rho = unvectorize(v, n);
        rho = 0.5 * (rho + rho.adjoint()).eval();
        const double tr = rho.trace().real();
        if (!(std::abs(tr) > 0.0) || !std::isfinite(tr)) {
            throw ConvergenceError("steady-state candidate has vanishing trace");
        }
        rho /= tr;
        const double residual = (L.matrix() * vectorize(rho)).norm();
        return {rho, residual};
    }

    CVector direct_solve() const {
        // replace the rho_00 equation by the trace condition
        const int n = L.n_max();
        std::vector<Triplet> t;
        t.reserve(L.matrix().nonZeros() + n);
        for (int col = 0; col < L.matrix().outerSize(); ++col) {
            for (SparseCMatrix::InnerIterator it(L.matrix(), col); it; ++it) {
                if (it.row() != 0) t.emplace_back(it.row(), col, it.value());
            }
        }
        for (int k = 0; k < n; ++k) t.emplace_back(0, k * (n + 1), Complex(1.0));
        SparseCMatrix A(L.dim(), L.dim());
        A.setFromTriplets(t.begin(), t.end());
        A.makeCompressed();
        Eigen::SparseLU<SparseCMatrix, Eigen::COLAMDOrdering<int>> solver;
        solver.compute(A);
        if (solver.info() != Eigen::Success) {
            throw ConvergenceError("trace-constrained steady-state system is singular");
        }
        CVector rhs = CVector::Zero(L.dim());
        rhs(0) = 1.0;
        CVector x = solver.solve(rhs);
        if (solver.info() != Eigen::Success) throw ConvergenceError("steady-state solve failed");
        return x;
    }

    void solve() {
        const int n = L.n_max();
        CVector x = vectorize(CMatrix::Identity(n, n) / static_cast<double>(n));
        bool converged = false;
        int it = 0;
        for (; it < opts.max_iterations; ++it) {
            CVector y = lu.solve(x);
            const Complex tr = vec_trace(y, n);
            if (std::abs(tr) == 0.0 || !y.allFinite()) break;
            y /= tr;
            const double change = (y - x).norm() / y.norm();
            x = std::move(y);
            if (change < opts.iteration_tol) {
                converged = true;
                ++it;
                break;
            }
        }
        ss.iterations = it;
        ss.used_direct_solve = false;
        double residual = std::numeric_limits<double>::infinity();
        CMatrix rho;
        if (converged) std::tie(rho, residual) = finish(x);
        if (!converged || residual > opts.residual_tol) {
            std::tie(rho, residual) = finish(direct_solve());
            ss.used_direct_solve = true;
        }
        if (!(residual <= opts.residual_tol)) {
            throw ConvergenceError("steady-state residual " + std::to_string(residual) +
                                   " exceeds tolerance");
        }
        ss.residual = residual;
        ss.rho = std::make_shared<const DensityMatrix>(std::move(rho));
        have_ss = true;
    }
};

LiouvillianSolver::LiouvillianSolver(const Superoperator& L, const SteadyStateOptions& opts)
    : impl_(std::make_unique<Impl>(L, opts)) {}

LiouvillianSolver::~LiouvillianSolver() = default;

const SteadyStateResult& LiouvillianSolver::steady_state() {
    if (!impl_->have_ss) impl_->solve();
    return impl_->ss;
}

GapResult LiouvillianSolver::gap(int nev) {
    const CVector rho_ss = vectorize(steady_state().rho->matrix());
    const int n = impl_->L.n_max();
    auto project = [&](CVector& v) { v -= vec_trace(v, n) * rho_ss; };

    CVector start(impl_->L.dim());
    for (Eigen::Index k = 0; k < start.size(); ++k) {
        start(k) = Complex(std::sin(0.7 * k + 0.3), std::cos(1.3 * k + 0.1));
    }
    project(start);

    auto op = [&](const CVector& x, CVector& y) {
        y = impl_->lu.solve(x);
        project(y);
    };
    ArnoldiOptions ao;
    ao.nev = std::min(nev, impl_->L.dim() - 2);
    ao.krylov_dim = std::min(std::max(3 * ao.nev + 4, 40), impl_->L.dim());
    const ArnoldiResult ar = arnoldi_dominant(op, start, ao);
    if (!ar.converged) throw ConvergenceError("shift-invert Arnoldi did not converge");

    GapResult out;
    out.restarts = ar.restarts;
    double best = -std::numeric_limits<double>::infinity();
    for (const Complex& theta : ar.values) {
        if (std::abs(theta) == 0.0) continue;
        const Complex lambda = impl_->opts.shift + 1.0 / theta;
        if (std::abs(lambda) < impl_->opts.degeneracy_tol) {
            throw DegenerateSteadyState("second eigenvalue with |lambda| = " +
                                        std::to_string(std::abs(lambda)) + " at the origin");
        }
        if (lambda.real() > best) {
            best = lambda.real();
            out.slowest = lambda;
        }
    }
    if (!std::isfinite(best)) throw ConvergenceError("no non-zero Liouvillian eigenvalue found");
    if (best > 1e-8) {
        throw NumericalError("Liouvillian eigenvalue in the right half-plane: " +
                             std::to_string(best));
    }
    out.gap = std::max(0.0, -best);
    return out;
}

SteadyStateResult steady_state(const Superoperator& L, const SteadyStateOptions& opts) {
    LiouvillianSolver solver(L, opts);
    SteadyStateResult result = solver.steady_state();
    if (opts.check_degeneracy) solver.gap();
    return result;
}

double liouvillian_gap(const Superoperator& L, int nev) {
    LiouvillianSolver solver(L);
    return solver.gap(nev).gap;
}

double max_stable_step(const Superoperator& L, const EvolveOptions& opts) {
    const double bound = L.gershgorin_bound();
    if (bound == 0.0) return std::numeric_limits<double>::infinity();
    return opts.stability_factor / bound;
}

DensityMatrix evolve(const DensityMatrix& rho0, const Superoperator& L, double t_final, double dt,
                     const EvolveOptions& opts) {
    if (rho0.dim() != L.n_max()) throw DimensionMismatch("state does not match the Liouvillian");
    require_finite(t_final, "t_final");
    require_finite(dt, "dt");
    if (t_final < 0.0) throw InvalidArgument("t_final must be non-negative");
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    const double dt_max = max_stable_step(L, opts);
    if (dt > dt_max * (1.0 + 1e-12)) {
        throw StepSizeError("dt = " + std::to_string(dt) + " exceeds the RK4 limit " +
                            std::to_string(dt_max));
    }
    const long steps = static_cast<long>(std::ceil(t_final / dt - 1e-12));
    const int n = L.n_max();
    CVector x = vectorize(rho0.matrix());
    const Complex tr0 = vec_trace(x, n);
    if (steps > 0) {
        const double h = t_final / static_cast<double>(steps);
        const SparseCMatrix& M = L.matrix();
        CVector k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()), tmp(x.size());
        for (long s = 0; s < steps; ++s) {
            k1.noalias() = M * x;
            tmp = x + (0.5 * h) * k1;
            k2.noalias() = M * tmp;
            tmp = x + (0.5 * h) * k2;
            k3.noalias() = M * tmp;
            tmp = x + h * k3;
            k4.noalias() = M * tmp;
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    if (!x.allFinite()) throw StepSizeError("RK4 propagation diverged");
    const double drift = std::abs(vec_trace(x, n) - tr0);
    if (drift > opts.trace_drift_tol) {
        throw StepSizeError("trace drift " + std::to_string(drift) + " exceeds tolerance");
    }
    CMatrix rho = unvectorize(x, n);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return DensityMatrix(std::move(rho));
}

}  // namespace wehrlflux
