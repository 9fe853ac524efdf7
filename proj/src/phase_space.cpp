#include "wehrlflux/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wehrlflux/errors.hpp"

namespace wehrlflux {

namespace {

constexpr double kPi = 3.14159265358979323846;

// a^dagger applied to each column: (a^dagger c)_m = sqrt(m) c_{m-1}
CMatrix raise_columns(const CMatrix& C) {
    const Eigen::Index n = C.rows();
    CMatrix D = CMatrix::Zero(n, C.cols());
    for (Eigen::Index m = 1; m < n; ++m) D.row(m) = std::sqrt(static_cast<double>(m)) * C.row(m - 1);
    return D;
}

double q_floor(const PhaseSpaceField& f, double rel) {
    return rel * (f.Q.size() > 0 ? f.Q.maxCoeff() : 0.0);
}

Complex ipow(Complex z, int e) {
    if (e == 0) return 1.0;
    if (e < 0) return 1.0 / ipow(z, -e);
    Complex r = 1.0;
    for (int k = 0; k < e; ++k) r *= z;
    return r;
}

}  // namespace

PhaseSpaceGrid build_grid(Complex center, double half_width, int points_per_axis) {
    require_finite(center.real(), "grid center");
    require_finite(center.imag(), "grid center");
    require_finite(half_width, "half_width");
    if (!(half_width > 0.0)) throw InvalidArgument("grid half_width must be positive");
    if (points_per_axis < kMinGridPoints) {
        throw InvalidArgument("grid needs at least " + std::to_string(kMinGridPoints) +
                              " points per axis");
    }
    PhaseSpaceGrid g;
    g.center = center;
    g.half_width = half_width;
    g.points_per_axis = points_per_axis;
    const int P = points_per_axis;
    const double h = g.spacing();
    g.nodes.resize(static_cast<std::size_t>(P) * P);
    g.weights.resize(g.nodes.size());
    for (int j = 0; j < P; ++j) {
        const double y = -half_width + j * h;
        const double wy = (j == 0 || j == P - 1) ? 0.5 * h : h;
        for (int i = 0; i < P; ++i) {
            const double x = -half_width + i * h;
            const double wx = (i == 0 || i == P - 1) ? 0.5 * h : h;
            g.nodes[i + P * j] = center + Complex(x, y);
            g.weights[i + P * j] = wx * wy;
        }
    }
    return g;
}

Eigen::ArrayXcd PhaseSpaceField::current(double kappa, Complex shift) const {
    Eigen::ArrayXcd J(Q.size());
    for (Eigen::Index k = 0; k < Q.size(); ++k) {
        J(k) = kappa * ((grid.nodes[k] - shift) * Q(k) + dQ_dmubar(k));
    }
    return J;
}

PhaseSpaceField husimi_field(const DensityMatrix& rho, const PhaseSpaceGrid& grid,
                             const HusimiOptions& opts) {
    const int n = rho.dim();
    const int K = grid.size();
    if (K == 0) throw InvalidArgument("empty phase-space grid");
    const std::vector<double> lf = log_factorials(n);
    const CMatrix& r = rho.matrix();

    PhaseSpaceField f;
    f.grid = grid;
    f.Q.resize(K);
    f.dQ_dmubar.resize(K);
    f.dQ_dmu.resize(K);

    const int chunk = std::max(1, opts.chunk);
    for (int start = 0; start < K; start += chunk) {
        const int m = std::min(chunk, K - start);
        CMatrix C(n, m);
        for (int k = 0; k < m; ++k) C.col(k) = coherent_components(grid.nodes[start + k], lf);
        const CMatrix D = raise_columns(C);
        const CMatrix R = r * C;
        const CMatrix RD = r * D;
        for (int k = 0; k < m; ++k) {
            const Complex mu = grid.nodes[start + k];
            const double q = std::max(0.0, C.col(k).dot(R.col(k)).real() / kPi);
            f.Q(start + k) = q;
            f.dQ_dmubar(start + k) = -mu * q + D.col(k).dot(R.col(k)) / kPi;
            f.dQ_dmu(start + k) = -std::conj(mu) * q + C.col(k).dot(RD.col(k)) / kPi;
        }
    }
    f.mass = (f.Q * Eigen::Map<const Eigen::ArrayXd>(grid.weights.data(), K)).sum();
    if (opts.check_mass && std::abs(f.mass - 1.0) > opts.mass_tol) {
        throw MassDeficit("Husimi mass on grid is " + std::to_string(f.mass), f.mass);
    }
    return f;
}

HusimiPoint husimi_at(const DensityMatrix& rho, Complex mu) {
    const CVector c = coherent_components(mu, rho.dim());
    const CVector d = raise_columns(c);
    const CVector rc = rho.matrix() * c;
    const CVector rd = rho.matrix() * d;
    HusimiPoint p;
    p.Q = c.dot(rc).real() / kPi;
    p.dQ_dmubar = -mu * p.Q + d.dot(rc) / kPi;
    p.dQ_dmu = -std::conj(mu) * p.Q + c.dot(rd) / kPi;
    return p;
}

double wehrl_entropy(const PhaseSpaceField& f) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < f.Q.size(); ++k) {
        const double q = f.Q(k);
        if (q > 0.0) s -= f.grid.weights[k] * q * std::log(q);
    }
    return s;
}

double entropy_flux(const DensityMatrix& rho, double kappa) {
    return 2.0 * kappa * expectation(rho, number_operator(rho.dim())).real();
}

FluxSplit flux_split(const DensityMatrix& rho, double kappa, int N) {
    if (N < 1) throw InvalidArgument("N must be positive");
    FluxSplit s;
    s.alpha = expectation(rho, annihilation(rho.dim())) / std::sqrt(static_cast<double>(N));
    s.Phi = entropy_flux(rho, kappa);
    s.Phi_ext = 2.0 * kappa * N * std::norm(s.alpha);
    s.Phi_q = s.Phi - s.Phi_ext;
    return s;
}

PiDResult pi_d(const PhaseSpaceField& f, double kappa, Complex alpha, int N, double q_floor_rel) {
    if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
    const Complex shift = alpha * std::sqrt(static_cast<double>(N));
    const double floor = q_floor(f, q_floor_rel);
    PiDResult out;
    double acc = 0.0;
    for (Eigen::Index k = 0; k < f.Q.size(); ++k) {
        const double q = f.Q(k);
        const double w = f.grid.weights[k];
        if (q < floor || q <= 0.0) {
            out.excluded_mass += w * q;
            continue;
        }
        const Complex j = (f.grid.nodes[k] - shift) * q + f.dQ_dmubar(k);
        acc += w * std::norm(j) / q;
    }
    // (2/kappa) |kappa j|^2 = 2 kappa |j|^2
    out.value = 2.0 * kappa * acc;
    return out;
}

PiUResult pi_u_kerr(const PhaseSpaceField& f, double u, int N, double q_floor_rel) {
    PiUResult out;
    if (u == 0.0) return out;
    const double floor = q_floor(f, q_floor_rel);
    Complex acc = 0.0;
    for (Eigen::Index k = 0; k < f.Q.size(); ++k) {
        const double q = f.Q(k);
        if (q < floor || q <= 0.0) continue;
        const Complex mu = f.grid.nodes[k];
        const Complex a = mu * f.dQ_dmu(k);
        const Complex b = std::conj(mu) * f.dQ_dmubar(k);
        acc += f.grid.weights[k] * (a * a - b * b) / q;
    }
    const Complex value = Complex(0.0, u / (2.0 * N)) * acc;
    out.value = value.real();
    out.imag_residue = value.imag();
    if (std::abs(out.imag_residue) > 1e-6) {
        throw QuadratureFailure("unitary production has imaginary residue " +
                                std::to_string(out.imag_residue));
    }
    return out;
}

NormalOrderedHamiltonian::NormalOrderedHamiltonian(std::map<Key, Complex> coefficients, double tol)
    : h_(std::move(coefficients)) {
    for (const auto& [key, value] : h_) {
        require_finite(value.real(), "h_rs");
        require_finite(value.imag(), "h_rs");
        const auto it = h_.find({key.second, key.first});
        const Complex partner = it == h_.end() ? Complex(0.0) : it->second;
        if (std::abs(value - std::conj(partner)) > tol) {
            throw InvalidArgument("normal-ordered Hamiltonian is not Hermitian at (" +
                                  std::to_string(key.first) + ", " + std::to_string(key.second) +
                                  ")");
        }
    }
}

NormalOrderedHamiltonian NormalOrderedHamiltonian::kerr(double detuning, double nonlinearity,
                                                        double eps) {
    std::map<Key, Complex> h;
    h[{1, 1}] = detuning;
    h[{2, 2}] = 0.5 * nonlinearity;
    if (eps != 0.0) {
        h[{1, 0}] = Complex(0.0, eps);
        h[{0, 1}] = Complex(0.0, -eps);
    }
    return NormalOrderedHamiltonian(std::move(h));
}

UnitaryGeneratorCoefficients xi_coefficients(const NormalOrderedHamiltonian& H, Complex alpha) {
    const Complex minus_i(0.0, -1.0);
    const Complex abar = std::conj(alpha);
    auto term = [&](Complex h, int pa, int pabar, double mult) -> Complex {
        if (mult == 0.0) return 0.0;
        if (alpha == 0.0 && (pa < 0 || pabar < 0)) {
            throw SingularExpansion("negative power of alpha at alpha = 0");
        }
        return h * ipow(alpha, pa) * ipow(abar, pabar) * mult;
    };
    UnitaryGeneratorCoefficients xi{0.0, 0.0, 0.0};
    for (const auto& [key, h] : H.coefficients()) {
        const int r = key.first;
        const int s = key.second;
        xi.xi1 += term(h, s - 1, r, s);
        xi.xi2 += term(h, s - 2, r, static_cast<double>(s) * (s - 1));
        xi.xi11 += term(h, s - 1, r - 1, static_cast<double>(r) * s);
    }
    xi.xi1 *= minus_i;
    xi.xi2 *= minus_i;
    xi.xi11 *= minus_i;
    return xi;
}

PiUResult pi_u_leading(const PhaseSpaceField& f, const UnitaryGeneratorCoefficients& xi,
                       double q_floor_rel) {
    PiUResult out;
    if (xi.xi2 == 0.0) return out;
    const double floor = q_floor(f, q_floor_rel);
    Complex acc = 0.0;
    for (Eigen::Index k = 0; k < f.Q.size(); ++k) {
        const double q = f.Q(k);
        if (q < floor || q <= 0.0) continue;
        const Complex db = f.dQ_dmubar(k);
        const Complex d = f.dQ_dmu(k);
        acc += f.grid.weights[k] * (xi.xi2 * db * db + std::conj(xi.xi2) * d * d) / q;
    }
    const Complex value = 0.5 * acc;
    out.value = value.real();
    out.imag_residue = value.imag();
    if (std::abs(out.imag_residue) > 1e-6) {
        throw QuadratureFailure("leading-order unitary production has imaginary residue " +
                                std::to_string(out.imag_residue));
    }
    return out;
}

void finalize_balance(EntropyBudget& b, double balance_tol) {
    b.dSdt = b.Pi() - b.Phi();
    // coherent states have Phi_q ~ 0, measure against the total flux there
    const double scale = std::max({b.Phi_q, 1e-6 * b.Phi(), 1e-12});
    b.balance_residual = std::abs(b.Pi_u + b.Pi_d - b.Phi_q) / scale;
    b.balance_ok = b.balance_residual < balance_tol;
}

EntropyBudget entropy_budget(const DensityMatrix& rho, const KerrParams& p,
                             const PhaseSpaceGrid& grid, const BudgetOptions& opts) {
    p.validate();
    return entropy_budget(rho, p, husimi_field(rho, grid, opts.husimi), opts);
}

EntropyBudget entropy_budget(const DensityMatrix& rho, const KerrParams& p,
                             const PhaseSpaceField& f, const BudgetOptions& opts) {
    p.validate();
    const FluxSplit fs = flux_split(rho, p.kappa, p.N);
    const PiDResult d = pi_d(f, p.kappa, fs.alpha, p.N, opts.q_floor_rel);
    const PiUResult u = pi_u_kerr(f, p.nonlinearity, p.N, opts.q_floor_rel);

    EntropyBudget b;
    b.S = wehrl_entropy(f);
    b.Phi_ext = fs.Phi_ext;
    b.Phi_q = fs.Phi_q;
    b.Pi_u = u.value;
    b.Pi_d = d.value;
    b.alpha = fs.alpha;
    b.N = p.N;
    b.mass = f.mass;
    b.excluded_mass = d.excluded_mass;
    b.pi_u_imag_residue = u.imag_residue;
    finalize_balance(b, opts.balance_tol);
    return b;
}

PhaseSpaceGrid auto_grid(const DensityMatrix& rho, int points_per_axis, double width_factor) {
    const Complex a = expectation(rho, annihilation(rho.dim()));
    const double n = expectation(rho, number_operator(rho.dim())).real();
    const double var = std::max(0.0, n - std::norm(a));
    const double hw = width_factor * std::max(1.0, std::sqrt(var + 1.0));
    return build_grid(a, hw, points_per_axis);
}

PhaseSpaceField auto_field(const DensityMatrix& rho, const AutoGridOptions& grid_opts,
                           const HusimiOptions& opts) {
    PhaseSpaceGrid grid = auto_grid(rho, grid_opts.points_per_axis, grid_opts.width_factor);
    const double h = grid.spacing();
    for (int attempt = 0;; ++attempt) {
        try {
            return husimi_field(rho, grid, opts);
        } catch (const MassDeficit& e) {
            if (attempt >= grid_opts.max_expansions || e.mass() > 1.0) throw;
            const double hw = grid.half_width * grid_opts.growth;
            const int P = static_cast<int>(std::ceil(2.0 * hw / h)) + 1;
            grid = build_grid(grid.center, hw, P);
        }
    }
}

EntropyBudget entropy_budget_auto(const DensityMatrix& rho, const KerrParams& p,
                                  const AutoGridOptions& grid_opts, const BudgetOptions& opts) {
    return entropy_budget(rho, p, auto_field(rho, grid_opts, opts.husimi), opts);
}

}  // namespace wehrlflux
