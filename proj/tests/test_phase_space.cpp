#include "doctest.h"

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "wehrlflux/errors.hpp"
#include "wehrlflux/liouvillian.hpp"
#include "wehrlflux/phase_space.hpp"

using namespace wehrlflux;

namespace {

const double kLogPi = std::log(3.14159265358979323846);
const double kPi = 3.14159265358979323846;

KerrParams fig_params(double eps, int N) {
    KerrParams p;
    p.detuning = -2.0;
    p.nonlinearity = 1.0;
    p.kappa = 0.5;
    p.eps = eps;
    p.N = N;
    return p;
}

DensityMatrix kerr_ness(const KerrParams& p) {
    const Superoperator L = build_kerr_liouvillian(p, kerr_required_cutoff(p));
    return *steady_state(L).rho;
}

DensityMatrix coherent(Complex mu, int n_max) {
    return DensityMatrix::pure(coherent_state(mu, n_max).components);
}

// D(beta) S(z) rho_th S^dagger D^dagger, built in a larger space and cut down
DensityMatrix displaced_squeezed_thermal(Complex beta, Complex z, double nbar, int n_max) {
    const int big = n_max + 40;
    const CMatrix a = annihilation(big).matrix();
    const CMatrix ad = a.adjoint();
    const CMatrix gen_s = 0.5 * (std::conj(z) * a * a - z * ad * ad);
    const CMatrix gen_d = beta * ad - std::conj(beta) * a;
    const CMatrix U = gen_d.exp() * gen_s.exp();
    const CMatrix th = DensityMatrix::thermal(nbar, big).matrix();
    CMatrix rho = (U * th * U.adjoint()).topLeftCorner(n_max, n_max);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
    return DensityMatrix(rho);
}

// symmetric quadrature covariance of x = (a + a^dag)/sqrt2, p = (a - a^dag)/(i sqrt2)
Eigen::Matrix2d quadrature_covariance(const DensityMatrix& rho) {
    const int n = rho.dim();
    const CMatrix a = annihilation(n).matrix();
    const CMatrix x = (a + a.adjoint()) / std::sqrt(2.0);
    const CMatrix p = (a - a.adjoint()) / Complex(0.0, std::sqrt(2.0));
    const CMatrix ops[2] = {x, p};
    Eigen::Vector2d mean;
    for (int i = 0; i < 2; ++i) mean(i) = (rho.matrix() * ops[i]).trace().real();
    Eigen::Matrix2d s;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            s(i, j) = 0.5 * (rho.matrix() * (ops[i] * ops[j] + ops[j] * ops[i])).trace().real() -
                      mean(i) * mean(j);
    return s;
}

DensityMatrix random_density(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> g;
    CMatrix A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = Complex(g(gen), g(gen)) * std::exp(-0.4 * (i + j));
    CMatrix rho = A * A.adjoint();
    rho /= rho.trace().real();
    return DensityMatrix(rho);
}

}  // namespace

TEST_CASE("grid_size_and_weight_sum") {
    const PhaseSpaceGrid g = build_grid(0.0, 5.0, 64);
    CHECK(g.size() == 4096);
    double sum = 0.0;
    for (double w : g.weights) sum += w;
    CHECK(std::abs(sum - 100.0) < 1e-10);
    CHECK_THROWS_AS(build_grid(0.0, 5.0, 32), InvalidArgument);
    CHECK_THROWS_AS(build_grid(0.0, -1.0, 64), InvalidArgument);
}

TEST_CASE("vacuum_husimi_is_gaussian_with_unit_mass") {
    const DensityMatrix vac = DensityMatrix::fock(10, 0);
    const PhaseSpaceField f = husimi_field(vac, build_grid(0.0, 6.0, 64));
    CHECK(std::abs(f.mass - 1.0) < 1e-10);
    for (int k = 0; k < f.grid.size(); k += 97) {
        const Complex mu = f.grid.nodes[k];
        CHECK(std::abs(f.Q(k) - std::exp(-std::norm(mu)) / kPi) < 1e-15);
    }
}

TEST_CASE("displaced_grid_keeps_coherent_mass") {
    const Complex alpha(4.0, -3.0);
    const PhaseSpaceField f = husimi_field(coherent(alpha, 80), build_grid(alpha, 6.0, 64));
    CHECK(std::abs(f.mass - 1.0) < 1e-10);
    const PhaseSpaceField off = husimi_field(coherent(alpha, 80), build_grid(0.0, 6.0, 64),
                                             HusimiOptions{1e-6, false});
    CHECK(off.mass < 1.0 - 1e-6);
    CHECK_THROWS_AS(husimi_field(coherent(alpha, 80), build_grid(0.0, 6.0, 64)), MassDeficit);
}

TEST_CASE("derivative_identity_matches_finite_differences") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> u(-2.5, 2.5);
    std::vector<DensityMatrix> states{coherent(Complex(1.0, 0.5), 30)};
    for (unsigned s = 0; s < 5; ++s) states.push_back(random_density(8, 100 + s));
    const double h = 1e-5;
    for (const auto& rho : states) {
        for (int t = 0; t < 20; ++t) {
            const Complex mu(u(gen), u(gen));
            const HusimiPoint p = husimi_at(rho, mu);
            const double dx = (husimi_at(rho, mu + h).Q - husimi_at(rho, mu - h).Q) / (2 * h);
            const double dy = (husimi_at(rho, mu + Complex(0, h)).Q -
                               husimi_at(rho, mu - Complex(0, h)).Q) / (2 * h);
            // d/dmubar = (d/dx + i d/dy) / 2
            const Complex fd = 0.5 * Complex(dx, dy);
            CHECK(std::abs(p.dQ_dmubar - fd) < 1e-6);
            CHECK(std::abs(p.dQ_dmu - std::conj(fd)) < 1e-6);
        }
    }
}

TEST_CASE("field_derivatives_are_conjugate") {
    const PhaseSpaceField f = husimi_field(random_density(10, 3), build_grid(0.0, 7.0, 64));
    CHECK((f.dQ_dmu - f.dQ_dmubar.conjugate()).abs().maxCoeff() < 1e-14);
    CHECK(f.Q.minCoeff() >= 0.0);
}

TEST_CASE("thermal_husimi_and_entropy") {
    const DensityMatrix th = DensityMatrix::thermal(1.0, 80);
    const PhaseSpaceField f = husimi_field(th, build_grid(0.0, 9.0, 128));
    CHECK(std::abs(f.mass - 1.0) < 1e-8);
    for (int k = 0; k < f.grid.size(); k += 211) {
        const Complex mu = f.grid.nodes[k];
        CHECK(std::abs(f.Q(k) - std::exp(-0.5 * std::norm(mu)) / (2 * kPi)) < 1e-12);
    }
    CHECK(std::abs(wehrl_entropy(f) - (1.0 + kLogPi + std::log(2.0))) < 1e-6);
}

TEST_CASE("wehrl_entropy_of_coherent_states") {
    const PhaseSpaceField vac = husimi_field(DensityMatrix::fock(10, 0), build_grid(0.0, 6.0, 64));
    CHECK(std::abs(wehrl_entropy(vac) - (1.0 + kLogPi)) < 1e-6);
    const PhaseSpaceField c = husimi_field(coherent(2.0, 40), build_grid(2.0, 6.0, 64));
    CHECK(std::abs(wehrl_entropy(c) - (1.0 + kLogPi)) < 1e-6);
}

TEST_CASE("entropy_flux_values") {
    CHECK(entropy_flux(DensityMatrix::fock(10, 0), 0.5) == 0.0);
    CHECK(std::abs(entropy_flux(coherent(2.0, 40), 0.5) - 4.0) < 1e-8);
    CHECK(std::abs(entropy_flux(DensityMatrix::thermal(2.0, 120), 0.5) - 2.0) < 1e-10);
}

TEST_CASE("flux_split_identities") {
    const FluxSplit c = flux_split(coherent(Complex(1.2, 0.4), 40), 0.5, 4);
    CHECK(std::abs(c.Phi_q) < 1e-10);
    CHECK(std::abs(c.alpha - Complex(0.6, 0.2)) < 1e-10);
    CHECK(c.Phi_ext + c.Phi_q == doctest::Approx(c.Phi).epsilon(1e-15));
    const FluxSplit v = flux_split(DensityMatrix::fock(10, 0), 0.5, 4);
    CHECK(v.Phi_ext == 0.0);
    CHECK(v.Phi_q == 0.0);
}

TEST_CASE("flux_split_quantum_part_grows_in_bistable_region") {
    const FluxSplit low = flux_split(kerr_ness(fig_params(0.3, 10)), 0.5, 10);
    const FluxSplit crit = flux_split(kerr_ness(fig_params(0.958, 10)), 0.5, 10);
    CHECK(crit.Phi_q > 10.0 * low.Phi_q);
    CHECK(crit.Phi_ext + crit.Phi_q == doctest::Approx(crit.Phi).epsilon(1e-14));
}

TEST_CASE("pi_d_vanishes_for_coherent_states") {
    const PhaseSpaceField vac = husimi_field(DensityMatrix::fock(10, 0), build_grid(0.0, 6.0, 64));
    CHECK(std::abs(pi_d(vac, 0.5, 0.0, 1).value) < 1e-12);
    const Complex beta(2.0, 0.0);
    const PhaseSpaceField c = husimi_field(coherent(beta, 40), build_grid(beta, 6.0, 64));
    CHECK(std::abs(pi_d(c, 0.5, beta / 2.0, 4).value) < 1e-10);
    // undisplaced current carries the coherent part 2 kappa |beta|^2
    CHECK(std::abs(pi_d(c, 0.5, 0.0, 4).value - 4.0) < 1e-8);
}

TEST_CASE("pi_d_thermal_closed_form") {
    const double nbar = 0.8, kappa = 0.7;
    const PhaseSpaceField f = husimi_field(DensityMatrix::thermal(nbar, 90), build_grid(0.0, 9.0, 128));
    const double expected = 2.0 * kappa * nbar * nbar / (nbar + 1.0);
    CHECK(std::abs(pi_d(f, kappa, 0.0, 1).value - expected) < 1e-4 * expected);
}

TEST_CASE("gaussian_closed_forms_match_quadrature") {
    const Complex beta(0.8, -0.5);
    const DensityMatrix rho = displaced_squeezed_thermal(beta, Complex(0.3, 0.2), 0.4, 60);
    const Eigen::Matrix2d sigma = quadrature_covariance(rho);
    const Eigen::Matrix2d sq = sigma + 0.5 * Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d K = sq.inverse();
    const Eigen::Vector2cd c = Eigen::Vector2cd(1.0, Complex(0.0, 1.0)) / std::sqrt(2.0);
    const Eigen::Vector2cd w = (Eigen::Matrix2cd::Identity() - K.cast<Complex>()) * c;
    const double kappa = 0.5;
    const double pid_closed = 2.0 * kappa * (w.adjoint() * sq.cast<Complex>() * w)(0).real();

    const Complex a = expectation(rho, annihilation(60));
    const PhaseSpaceField f = husimi_field(rho, build_grid(a, 8.0, 160));
    const double pid = pi_d(f, kappa, a, 1).value;
    CHECK(std::abs(pid - pid_closed) < 1e-4 * pid_closed);

    const double S_closed = 1.0 + kLogPi + 0.5 * std::log(sq.determinant());
    CHECK(std::abs(wehrl_entropy(f) - S_closed) < 1e-6);

    UnitaryGeneratorCoefficients xi{0.0, Complex(0.3, -1.1), 0.0};
    const double piu_closed = (xi.xi2 * (c.transpose() * K.cast<Complex>() * c)(0)).real();
    const double piu = pi_u_leading(f, xi).value;
    CHECK(std::abs(piu - piu_closed) < 1e-4 * std::abs(piu_closed));
}

TEST_CASE("pi_d_invariant_under_grid_recentering") {
    const DensityMatrix rho = kerr_ness(fig_params(0.8, 5));
    const FluxSplit fs = flux_split(rho, 0.5, 5);
    const PhaseSpaceGrid g0 = auto_field(rho).grid;
    const PhaseSpaceGrid g1 = build_grid(g0.center + Complex(0.4, -0.3), g0.half_width + 1.0, 140);
    const double d0 = pi_d(husimi_field(rho, g0), 0.5, fs.alpha, 5).value;
    const double d1 = pi_d(husimi_field(rho, g1), 0.5, fs.alpha, 5).value;
    CHECK(std::abs(d0 - d1) < 1e-6);
}

TEST_CASE("pi_u_kerr_zero_cases") {
    const PhaseSpaceField c = husimi_field(coherent(Complex(1.0, 1.5), 40),
                                           build_grid(Complex(1.0, 1.5), 6.0, 64));
    CHECK(pi_u_kerr(c, 0.0, 3).value == 0.0);
    CHECK(std::abs(pi_u_kerr(c, 1.0, 3).value) < 1e-8);
}

TEST_CASE("xi_coefficients_kerr_and_limits") {
    const auto xi = xi_coefficients(NormalOrderedHamiltonian::kerr(-2.0, 1.0, 0.0), 1.0);
    CHECK(std::abs(xi.xi2 - Complex(0.0, -1.0)) < 1e-15);

    std::map<NormalOrderedHamiltonian::Key, Complex> harmonic{{{1, 1}, 1.7}};
    CHECK(xi_coefficients(NormalOrderedHamiltonian(harmonic), Complex(0.3, 0.9)).xi2 == 0.0);

    std::map<NormalOrderedHamiltonian::Key, Complex> drive{{{1, 0}, Complex(0, 0.5)},
                                                           {{0, 1}, Complex(0, -0.5)}};
    const auto xd = xi_coefficients(NormalOrderedHamiltonian(drive), Complex(0.4, 0.1));
    CHECK(xd.xi2 == 0.0);
    CHECK(xd.xi11 == 0.0);
    CHECK(std::abs(xd.xi1) > 0.1);
    CHECK_NOTHROW(xi_coefficients(NormalOrderedHamiltonian(drive), 0.0));
}

TEST_CASE("xi_coefficients_match_symbol_derivatives") {
    // xi1 = -i dH/dmu, xi2 = -i d2H/dmu2, xi11 = -i d2H/dmu dmubar for the
    // symbol H(z, w) = sum h_rs w^r z^s, differentiated numerically
    std::map<NormalOrderedHamiltonian::Key, Complex> h{
        {{1, 1}, -1.3}, {{2, 2}, 0.45}, {{3, 1}, Complex(0.2, 0.1)}, {{1, 3}, Complex(0.2, -0.1)},
        {{2, 0}, Complex(0.0, 0.3)}, {{0, 2}, Complex(0.0, -0.3)}, {{1, 0}, 0.7}, {{0, 1}, 0.7}};
    const NormalOrderedHamiltonian H(h);
    const Complex alpha(0.8, -0.6);
    auto symbol = [&](Complex z, Complex w) {
        Complex s = 0.0;
        for (const auto& [key, v] : h) s += v * std::pow(w, key.first) * std::pow(z, key.second);
        return s;
    };
    const Complex z = alpha, w = std::conj(alpha);
    const double e = 1e-4;
    const Complex dz = (symbol(z + e, w) - symbol(z - e, w)) / (2 * e);
    const Complex dzz = (symbol(z + e, w) - 2.0 * symbol(z, w) + symbol(z - e, w)) / (e * e);
    const Complex dzw = (symbol(z + e, w + e) - symbol(z + e, w - e) - symbol(z - e, w + e) +
                         symbol(z - e, w - e)) / (4 * e * e);
    const Complex mi(0.0, -1.0);
    const auto xi = xi_coefficients(H, alpha);
    CHECK(std::abs(xi.xi1 - mi * dz) < 1e-7);
    CHECK(std::abs(xi.xi2 - mi * dzz) < 1e-6);
    CHECK(std::abs(xi.xi11 - mi * dzw) < 1e-6);
}

TEST_CASE("xi11_purely_imaginary_for_diagonal_hamiltonian") {
    std::map<NormalOrderedHamiltonian::Key, Complex> h{{{1, 1}, -2.0}, {{2, 2}, 0.5}, {{3, 3}, 0.1}};
    const auto xi = xi_coefficients(NormalOrderedHamiltonian(h), Complex(0.7, 1.1));
    CHECK(std::abs(xi.xi11.real()) < 1e-14);
}

TEST_CASE("normal_ordered_hamiltonian_requires_hermiticity") {
    std::map<NormalOrderedHamiltonian::Key, Complex> bad{{{1, 0}, 1.0}};
    CHECK_THROWS_AS(NormalOrderedHamiltonian{bad}, InvalidArgument);
    std::map<NormalOrderedHamiltonian::Key, Complex> diag{{{1, 1}, Complex(0.0, 1.0)}};
    CHECK_THROWS_AS(NormalOrderedHamiltonian{diag}, InvalidArgument);
}

TEST_CASE("singular_expansion_for_negative_powers") {
    std::map<NormalOrderedHamiltonian::Key, Complex> h{{{-1, 3}, 1.0}, {{3, -1}, 1.0}};
    CHECK_THROWS_AS(xi_coefficients(NormalOrderedHamiltonian(h), 0.0), SingularExpansion);
}

TEST_CASE("auto_field_widens_grid_for_bimodal_state") {
    const DensityMatrix rho = kerr_ness(fig_params(0.9, 8));
    // a deliberately narrow start
    AutoGridOptions narrow;
    narrow.width_factor = 6.0;
    const PhaseSpaceGrid start = auto_grid(rho, narrow.points_per_axis, narrow.width_factor);
    CHECK_THROWS_AS(husimi_field(rho, start), MassDeficit);
    const PhaseSpaceField f = auto_field(rho, narrow);
    CHECK(std::abs(f.mass - 1.0) < 1e-6);
    CHECK(f.grid.half_width > start.half_width);
    CHECK(f.grid.spacing() == doctest::Approx(start.spacing()).epsilon(0.02));
}

TEST_CASE("empty_cavity_budget") {
    KerrParams p;
    p.detuning = 0.0;
    p.nonlinearity = 0.0;
    p.kappa = 0.5;
    p.eps = 1.0;
    p.N = 1;
    const DensityMatrix rho = *steady_state(build_kerr_liouvillian(p, 40)).rho;
    const EntropyBudget b = entropy_budget_auto(rho, p);
    CHECK(std::abs(b.Pi_ext() - 4.0) < 1e-4 * 4.0);
    CHECK(b.Pi_ext() == b.Phi_ext);
    CHECK(std::abs(b.Pi_u) < 1e-8);
    CHECK(std::abs(b.Pi_d) < 1e-8);
    CHECK(std::abs(b.Phi_q) < 1e-8);
}

TEST_CASE("undriven_budget_is_zero") {
    const KerrParams p = fig_params(0.0, 5);
    const EntropyBudget b = entropy_budget_auto(kerr_ness(p), p);
    CHECK(b.Phi_ext == 0.0);
    CHECK(std::abs(b.Phi_q) < 1e-14);
    CHECK(std::abs(b.Pi_u) < 1e-12);
    CHECK(std::abs(b.Pi_d) < 1e-12);
    CHECK(std::abs(b.dSdt) < 1e-12);
}

TEST_CASE("kerr_budget_balances_and_bounds_hold") {
    for (double eps : {0.5, 0.8, 0.95, 1.1, 1.4}) {
        const KerrParams p = fig_params(eps, 10);
        const DensityMatrix rho = kerr_ness(p);
        const EntropyBudget b = entropy_budget_auto(rho, p);
        CAPTURE(eps);
        CHECK(b.balance_ok);
        CHECK(b.balance_residual < 1e-2);
        CHECK(b.Pi_d >= 0.0);
        CHECK(b.S >= 1.0 + kLogPi - 1e-6);
        CHECK(b.S >= von_neumann_entropy(rho) - 1e-6);
        CHECK(std::abs(b.dSdt) < 1e-2 * b.Phi_q);
    }
}

TEST_CASE("kerr_unitary_production_small_near_transition") {
    const KerrParams p = fig_params(0.958, 10);
    const EntropyBudget b = entropy_budget_auto(kerr_ness(p), p);
    CHECK(b.Pi_u > 0.0);
    CHECK(b.Pi_u < 10.0);
    CHECK(b.Pi_d / p.N > 0.1);
    CHECK(b.Pi_d / p.N < 10.0);
    CHECK(b.Pi_u < b.Pi_d);
}

TEST_CASE("displaced_and_undisplaced_forms_agree") {
    const KerrParams p = fig_params(0.9, 8);
    const DensityMatrix rho = kerr_ness(p);
    const FluxSplit fs = flux_split(rho, p.kappa, p.N);
    const PhaseSpaceField fc = auto_field(rho);
    const PhaseSpaceGrid& centred = fc.grid;
    const PhaseSpaceGrid origin = build_grid(0.0, std::abs(centred.center) + centred.half_width, 240);
    const PhaseSpaceField fo = husimi_field(rho, origin);
    const double full = pi_d(fo, p.kappa, 0.0, p.N).value;
    const double split = fs.Phi_ext + pi_d(fc, p.kappa, fs.alpha, p.N).value;
    CHECK(std::abs(full - split) < 1e-6 * full);
    const double u_c = pi_u_kerr(fc, p.nonlinearity, p.N).value;
    const double u_o = pi_u_kerr(fo, p.nonlinearity, p.N).value;
    CHECK(std::abs(u_c - u_o) < 1e-5 * std::abs(u_c));
}

TEST_CASE("entropy_rate_along_trajectory_matches_production_minus_flux") {
    const KerrParams p = fig_params(0.8, 3);
    const int n = kerr_required_cutoff(p);
    const Superoperator L = build_kerr_liouvillian(p, n);
    const double dt = max_stable_step(L);
    const double t = 1.5, h = 1e-2;
    const DensityMatrix r0 = evolve(DensityMatrix::fock(n, 0), L, t - h, dt);
    const DensityMatrix r1 = evolve(r0, L, h, dt);
    const DensityMatrix r2 = evolve(r1, L, h, dt);
    const PhaseSpaceGrid g = build_grid(expectation(r1, annihilation(n)), 9.0, 160);
    const double dS = (wehrl_entropy(husimi_field(r2, g)) - wehrl_entropy(husimi_field(r0, g))) / (2 * h);
    const PhaseSpaceField f = husimi_field(r1, g);
    const FluxSplit fs = flux_split(r1, p.kappa, p.N);
    const double pi = fs.Phi_ext + pi_d(f, p.kappa, fs.alpha, p.N).value +
                      pi_u_kerr(f, p.nonlinearity, p.N).value;
    CHECK(std::abs(dS - (pi - fs.Phi)) < 1e-4 * std::max(1.0, std::abs(dS)));
}
