#pragma once

#include <memory>

#include <Eigen/Sparse>

#include "wehrlflux/fock_algebra.hpp"
#include "wehrlflux/kerr_params.hpp"

namespace wehrlflux {

using SparseCMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor>;

/// Lindblad generator acting on column-stacked density matrices,
/// vec(rho)[i + n_max * j] = rho(i, j).
class Superoperator {
public:
    Superoperator(int n_max, SparseCMatrix entries);

    int n_max() const { return n_max_; }
    int dim() const { return n_max_ * n_max_; }
    const SparseCMatrix& matrix() const { return entries_; }

    /// unvec(L vec(rho)).
    CMatrix apply(const CMatrix& rho) const;
    /// max over columns of |sum_k L(kk, col)|, zero for a trace-preserving map.
    double trace_preservation_defect() const;
    /// Gershgorin bound on the spectral radius.
    double gershgorin_bound() const;

private:
    int n_max_;
    SparseCMatrix entries_;
};

CVector vectorize(const CMatrix& rho);
CMatrix unvectorize(const CVector& v, int n_max);

/// -i[H, .] + rate (J . J^dagger - 1/2 {J^dagger J, .}).
Superoperator build_lindblad(const FockOperator& hamiltonian, const FockOperator& jump, double rate);

FockOperator kerr_hamiltonian(const KerrParams& p, int n_max);

/// Kerr generator with loss 2 kappa. Throws TruncationInadequate when n_max is
/// below the cutoff rule unless check_cutoff is false.
Superoperator build_kerr_liouvillian(const KerrParams& p, int n_max, bool check_cutoff = true,
                                     const CutoffRule& rule = {});

struct SteadyStateOptions {
    double shift = 1e-8;
    int max_iterations = 8;
    double iteration_tol = 1e-13;   // change between normalised iterates
    double residual_tol = 1e-10;    // ||L rho||_F
    double degeneracy_tol = 1e-12;  // a second |lambda| below this is an error
    bool check_degeneracy = true;
};

struct SteadyStateResult {
    std::shared_ptr<const DensityMatrix> rho;
    double residual = 0.0;
    int iterations = 0;
    bool used_direct_solve = false;
};

struct GapResult {
    double gap = 0.0;
    Complex slowest{0.0, 0.0};
    int restarts = 0;
};

/// Factorises L - shift I once and reuses it for the steady state and the gap.
class LiouvillianSolver {
public:
    explicit LiouvillianSolver(const Superoperator& L, const SteadyStateOptions& opts = {});
    ~LiouvillianSolver();
    LiouvillianSolver(const LiouvillianSolver&) = delete;
    LiouvillianSolver& operator=(const LiouvillianSolver&) = delete;

    /// Inverse iteration at the shift; falls back to a trace-constrained
    /// direct solve when the iteration stalls (tiny gaps).
    const SteadyStateResult& steady_state();
    /// Shift-invert Arnoldi on the traceless subspace.
    GapResult gap(int nev = 12);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Steady state with the residual check and, by default, the degeneracy probe.
SteadyStateResult steady_state(const Superoperator& L, const SteadyStateOptions& opts = {});

double liouvillian_gap(const Superoperator& L, int nev = 12);

struct EvolveOptions {
    double trace_drift_tol = 1e-9;
    double stability_factor = 0.1;  // dt <= factor / Gershgorin bound
};

/// Fixed-step RK4 propagation to t_final with step at most dt.
DensityMatrix evolve(const DensityMatrix& rho0, const Superoperator& L, double t_final, double dt,
                     const EvolveOptions& opts = {});

/// The largest step evolve accepts for L.
double max_stable_step(const Superoperator& L, const EvolveOptions& opts = {});

}  // namespace wehrlflux
