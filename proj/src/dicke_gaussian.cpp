#include "wehrlflux/dicke_gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <Eigen/Eigenvalues>

#include "wehrlflux/errors.hpp"

namespace wehrlflux {

namespace {

using CVec4 = Eigen::Vector4cd;

const double kPi = 3.14159265358979323846;

// c^T r is the complex amplitude of a mode, c^T grad its d/d(mubar).
CVec4 mode_a() { return CVec4(0.0, 0.0, 1.0, Complex(0.0, 1.0)) / std::sqrt(2.0); }
CVec4 mode_b() { return CVec4(1.0, Complex(0.0, 1.0), 0.0, 0.0) / std::sqrt(2.0); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

void DickeParams::validate() const {
    for (double v : {omega0, omega, kappa, lambda, gamma}) require_finite(v, "Dicke parameter");
    if (omega0 <= 0.0) throw InvalidArgument("omega0 must be positive");
    if (omega <= 0.0) throw InvalidArgument("omega must be positive");
    if (kappa <= 0.0) throw InvalidArgument("kappa must be positive");
    if (gamma <= 0.0) throw InvalidArgument("gamma must be positive");
    if (lambda < 0.0) throw InvalidArgument("lambda must be non-negative");
}

std::vector<std::string> DickeParams::warnings() const {
    std::vector<std::string> w;
    if (gamma > 0.01 * kappa) {
        w.push_back("gamma = " + fmt("%g", gamma) + " is not small compared with kappa; " +
                    "spin-loss corrections are no longer negligible");
    }
    return w;
}

double critical_coupling(const DickeParams& p) {
    p.validate();
    return 0.5 * std::sqrt(p.omega0 / p.omega * (p.kappa * p.kappa + p.omega * p.omega));
}

MeanFieldRates mean_field_rhs(const MeanFieldState& s, const DickeParams& p) {
    const Complex i(0.0, 1.0);
    const double x = 2.0 * s.alpha.real();  // alpha + conj(alpha)
    MeanFieldRates r;
    r.alpha = -(p.kappa + i * p.omega) * s.alpha - i * p.lambda * 2.0 * s.beta.real();
    r.beta = -i * p.omega0 * s.beta + 2.0 * i * p.lambda * x * s.w;
    r.w = (-i * p.lambda * x * (std::conj(s.beta) - s.beta)).real();
    return r;
}

MeanFieldState mean_field_fixed_point(const DickeParams& p) {
    const double lc = critical_coupling(p);
    MeanFieldState s;
    if (p.lambda <= lc) return s;
    const double ratio = lc / p.lambda;
    const double r2 = ratio * ratio;
    s.beta = 0.5 * std::sqrt(1.0 - r2 * r2);
    s.w = -0.5 * r2;
    s.alpha = -2.0 * Complex(0.0, 1.0) * p.lambda * s.beta / Complex(p.kappa, p.omega);
    return s;
}

HPCoefficients hp_coefficients(const MeanFieldState& mf, const DickeParams& p) {
    p.validate();
    const double beta = mf.beta.real();
    if (std::abs(beta) > 0.5 + 1e-14) throw SingularBranch("|beta| exceeds 1/2");
    const double root = std::sqrt(std::max(0.0, 1.0 - 4.0 * beta * beta));
    HPCoefficients hp;
    hp.beta_tilde_minus = std::sqrt((1.0 - root) / 2.0);
    hp.beta_tilde_plus = std::sqrt((1.0 + root) / 2.0);
    if (hp.beta_tilde_plus < 1e-300) throw SingularBranch("beta_tilde_plus vanishes");
    const double ratio = hp.beta_tilde_minus / hp.beta_tilde_plus;
    const double x = 2.0 * mf.alpha.real();
    hp.omega0_tilde = p.omega0 - p.lambda * x * ratio;
    hp.lambda_tilde = p.lambda * hp.beta_tilde_plus * (1.0 - ratio * ratio);
    hp.zeta = 0.5 * p.lambda * x * ratio * (1.0 + 0.5 * ratio * ratio);
    return hp;
}

DriftDiffusion drift_diffusion(const HPCoefficients& hp, const DickeParams& p) {
    DriftDiffusion dd;
    dd.A_u << 0.0, hp.omega0_tilde, 0.0, 0.0,
              4.0 * hp.zeta - hp.omega0_tilde, 0.0, -2.0 * hp.lambda_tilde, 0.0,
              0.0, 0.0, 0.0, p.omega,
              -2.0 * hp.lambda_tilde, 0.0, -p.omega, 0.0;
    dd.D = Vec4(p.gamma, p.gamma, p.kappa, p.kappa).asDiagonal();
    dd.A = dd.A_u - dd.D;
    return dd;
}

double uncertainty_margin(const Mat4& sigma) {
    Eigen::Matrix4cd M = sigma.cast<Complex>();
    const Complex half_i(0.0, 0.5);
    for (int k = 0; k < 4; k += 2) {
        M(k, k + 1) += half_i;
        M(k + 1, k) -= half_i;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

Mat4 solve_lyapunov(const Mat4& A, const Mat4& D, const LyapunovOptions& opts) {
    if (!A.allFinite() || !D.allFinite()) throw InvalidArgument("non-finite Lyapunov input");
    const Eigen::Vector4cd ev = A.eigenvalues();
    int worst = 0;
    for (int k = 1; k < 4; ++k)
        if (ev(k).real() > ev(worst).real()) worst = k;
    if (ev(worst).real() >= -opts.hurwitz_margin) {
        throw UnstableSystem("drift matrix is not Hurwitz: eigenvalue " +
                             fmt("%.6g", ev(worst).real()) + fmt(" %+.6gi", ev(worst).imag()));
    }
    // vec(A S + S A^T) = (I kron A + A kron I) vec(S), column-major vec
    Eigen::Matrix<double, 16, 16> M = Eigen::Matrix<double, 16, 16>::Zero();
    const Mat4 I = Mat4::Identity();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            M.block<4, 4>(4 * i, 4 * j) += I(i, j) * A;
            M.block<4, 4>(4 * i, 4 * j) += A(i, j) * I;
        }
    Eigen::Matrix<double, 16, 1> rhs;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) rhs(i + 4 * j) = -D(i, j);
    const Eigen::Matrix<double, 16, 1> x = M.fullPivLu().solve(rhs);
    Mat4 S;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) S(i, j) = x(i + 4 * j);
    S = 0.5 * (S + S.transpose()).eval();

    const double res = (A * S + S * A.transpose() + D).norm();
    if (!(res <= opts.residual_tol * std::max(1.0, A.norm() * S.norm()))) {
        throw ConvergenceError("Lyapunov residual " + fmt("%.3e", res));
    }
    const double margin = uncertainty_margin(S);
    if (margin < -opts.physicality_tol) {
        throw InvalidCovariance("covariance violates the uncertainty relation, margin " +
                                fmt("%.3e", margin));
    }
    return S;
}

DickeBudget gaussian_budget(const Mat4& sigma, const HPCoefficients& hp, const DickeParams& p,
                            const MeanFieldState& mf, int N) {
    if (N < 1) throw InvalidArgument("N must be positive");
    const Mat4 SQ = sigma + 0.5 * Mat4::Identity();
    Eigen::LLT<Mat4> llt(SQ);
    if (llt.info() != Eigen::Success) throw InvalidCovariance("Husimi covariance not positive definite");
    const Mat4 K = llt.solve(Mat4::Identity());
    const DriftDiffusion dd = drift_diffusion(hp, p);
    const Mat4 D_u = -0.5 * (dd.A_u + dd.A_u.transpose());

    const Eigen::Matrix4cd M = (Mat4::Identity() - K).cast<Complex>();
    const CVec4 va = M * mode_a();
    const CVec4 vb = M * mode_b();
    const Eigen::Matrix4cd SQc = SQ.cast<Complex>();

    DickeBudget out;
    EntropyBudget& b = out.budget;
    double logdet = 0.0;
    for (int k = 0; k < 4; ++k) logdet += 2.0 * std::log(llt.matrixL()(k, k));
    b.S = 2.0 * (1.0 + std::log(kPi)) + 0.5 * logdet;
    b.alpha = mf.alpha;
    b.N = N;
    b.Phi_ext = 2.0 * p.kappa * N * std::norm(mf.alpha);
    b.Phi_q = p.kappa * (sigma(2, 2) + sigma(3, 3) - 1.0);
    b.Pi_d = 2.0 * p.kappa * va.dot(SQc * va).real();
    b.Pi_u = 0.5 * (D_u * K).trace();
    b.mass = 1.0;
    out.Pi_d_b = 2.0 * p.gamma * vb.dot(SQc * vb).real();
    out.Phi_q_b = p.gamma * (sigma(0, 0) + sigma(1, 1) - 1.0);
    out.beta = mf.beta.real();

    const double produced = b.Pi_u + b.Pi_d + out.Pi_d_b;
    const double flux = b.Phi_q + out.Phi_q_b;
    b.dSdt = produced - flux;
    out.full_balance_residual = std::abs(produced - flux) / std::max(flux, 1e-12);
    b.balance_residual = out.full_balance_residual;
    b.balance_ok = out.full_balance_residual < 1e-6;
    return out;
}

DickePoint dicke_point(const DickeParams& p, int N) {
    p.validate();
    DickePoint pt;
    pt.lambda = p.lambda;
    pt.mf = mean_field_fixed_point(p);
    pt.hp = hp_coefficients(pt.mf, p);
    pt.dd = drift_diffusion(pt.hp, p);
    pt.sigma = solve_lyapunov(pt.dd.A, pt.dd.D);
    pt.lyapunov_residual =
        (pt.dd.A * pt.sigma + pt.sigma * pt.dd.A.transpose() + pt.dd.D).norm();
    pt.result = gaussian_budget(pt.sigma, pt.hp, p, pt.mf, N);
    return pt;
}

MonteCarloEstimate monte_carlo_budget(const Mat4& sigma, const HPCoefficients& hp,
                                      const DickeParams& p, std::int64_t samples,
                                      std::uint64_t seed) {
    if (samples < 2) throw InvalidArgument("need at least two samples");
    const Mat4 SQ = sigma + 0.5 * Mat4::Identity();
    Eigen::LLT<Mat4> llt(SQ);
    if (llt.info() != Eigen::Success) throw InvalidCovariance("Husimi covariance not positive definite");
    const Mat4 L = llt.matrixL();
    const Mat4 K = llt.solve(Mat4::Identity());
    double logdet = 0.0;
    for (int k = 0; k < 4; ++k) logdet += 2.0 * std::log(L(k, k));
    // Q over d^2mu_a d^2mu_b is 4 times the density of r
    const double log_norm = -2.0 * std::log(kPi) - 0.5 * logdet;

    const CVec4 ca = mode_a(), cb = mode_b();
    const Complex i(0.0, 1.0);
    // H contains -zeta (b + b^dagger)^2 + lambda_tilde (a + a^dagger)(b + b^dagger)
    const Complex xi_bb = 2.0 * i * hp.zeta;
    const Complex xi_ab = -i * hp.lambda_tilde;

    struct Acc {
        double sum = 0.0, sum2 = 0.0;
        void add(double v) { sum += v; sum2 += v * v; }
    } accS, accD, accU;

    // blocks with their own seed keep the stream independent of any later
    // parallel split
    constexpr std::int64_t kBlock = 1 << 16;
    std::normal_distribution<double> normal;
    for (std::int64_t start = 0, block = 0; start < samples; start += kBlock, ++block) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
        std::mt19937_64 rng(seq);
        normal.reset();
        const std::int64_t end = std::min(samples, start + kBlock);
        for (std::int64_t s = start; s < end; ++s) {
            Vec4 z;
            for (int k = 0; k < 4; ++k) z(k) = normal(rng);
            const Vec4 r = L * z;
            const Vec4 g = -(K * r);  // grad ln Q
            const double lnQ = log_norm - 0.5 * r.dot(K * r);
            accS.add(-lnQ);
            const Complex nu_a = (ca.transpose() * r.cast<Complex>())(0);
            const Complex da = (ca.transpose() * g.cast<Complex>())(0);
            const Complex db = (cb.transpose() * g.cast<Complex>())(0);
            accD.add(2.0 * p.kappa * std::norm(nu_a + da));
            const Complex u = xi_bb * db * db + 2.0 * xi_ab * da * db;
            accU.add(u.real());
        }
    }
    const double n = static_cast<double>(samples);
    auto mean = [n](const Acc& a) { return a.sum / n; };
    auto err = [n](const Acc& a) {
        const double m = a.sum / n;
        return std::sqrt(std::max(0.0, a.sum2 / n - m * m) / (n - 1.0));
    };
    MonteCarloEstimate e;
    e.samples = samples;
    e.S = mean(accS);
    e.Pi_d = mean(accD);
    e.Pi_u = mean(accU);
    e.S_err = err(accS);
    e.Pi_d_err = err(accD);
    e.Pi_u_err = err(accU);
    return e;
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, int min_points) {
    if (x.size() != y.size()) throw DimensionMismatch("fit_loglog: x and y differ in length");
    const int n = static_cast<int>(x.size());
    if (n < min_points || n < 3) {
        throw InsufficientPoints("log-log fit needs " + std::to_string(std::max(min_points, 3)) +
                                 " points, got " + std::to_string(n));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> lx(n), ly(n);
    for (int k = 0; k < n; ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw InvalidArgument("log-log fit needs positive data");
        lx[k] = std::log10(x[k]);
        ly[k] = std::log10(y[k]);
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
    }
    const double den = n * sxx - sx * sx;
    if (!(std::abs(den) > 0.0)) throw InvalidArgument("log-log fit needs distinct x values");
    LogLogFit f;
    f.points = n;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0.0;
    for (int k = 0; k < n; ++k) {
        const double r = ly[k] - f.intercept - f.slope * lx[k];
        ss += r * r;
    }
    f.slope_err = std::sqrt(ss / (n - 2) * n / den);
    return f;
}

DivergenceReport fit_divergence(const std::vector<double>& lambda, const std::vector<double>& Pi_d,
                                double lambda_c, const DivergenceWindow& window,
                                double gamma_over_kappa) {
    if (lambda.size() != Pi_d.size()) throw DimensionMismatch("lambda and Pi_d differ in length");
    if (!(window.lo > 0.0) || !(window.hi > window.lo)) {
        throw InvalidArgument("divergence window needs 0 < lo < hi");
    }
    DivergenceReport rep;
    rep.lambda_c = lambda_c;
    rep.window = window;
    if (gamma_over_kappa > 0.0 && window.lo < 10.0 * gamma_over_kappa) {
        rep.warnings.push_back("window reaches into the gamma-rounded core (relative distance < " +
                               fmt("%g", 10.0 * gamma_over_kappa) + ")");
    }
    std::vector<double> xl, yl, xr, yr;
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        const double d = std::abs(lambda[k] / lambda_c - 1.0);
        if (d < window.lo * (1.0 - 1e-12) || d > window.hi * (1.0 + 1e-12)) continue;
        const double dist = std::abs(lambda_c - lambda[k]);
        if (lambda[k] < lambda_c) {
            xl.push_back(dist);
            yl.push_back(Pi_d[k]);
        } else {
            xr.push_back(dist);
            yr.push_back(Pi_d[k]);
        }
    }
    rep.below = fit_loglog(xl, yl);
    rep.above = fit_loglog(xr, yr);
    return rep;
}

std::vector<double> divergence_grid(const DickeParams& p_base, const DivergenceWindow& window,
                                    int n_per_side) {
    if (n_per_side < 2) throw InvalidArgument("need at least two points per side");
    const double lc = critical_coupling(p_base);
    std::vector<double> grid;
    const double a = std::log10(window.lo), b = std::log10(window.hi);
    for (int side : {-1, 1}) {
        for (int k = 0; k < n_per_side; ++k) {
            const double d = std::pow(10.0, a + (b - a) * k / (n_per_side - 1));
            grid.push_back(lc * (1.0 + side * d));
        }
    }
    std::sort(grid.begin(), grid.end());
    return grid;
}

DivergenceReport divergence_scan(const DickeParams& p_base, const std::vector<double>& lambda_grid,
                                 const DivergenceWindow& window) {
    std::vector<double> pid;
    for (double lam : lambda_grid) {
        DickeParams p = p_base;
        p.lambda = lam;
        pid.push_back(dicke_point(p).result.budget.Pi_d);
    }
    return fit_divergence(lambda_grid, pid, critical_coupling(p_base), window,
                          p_base.gamma / p_base.kappa);
}

KinkReport kink_detector(const DickeParams& p_base, const std::vector<double>& lambda_grid) {
    KinkReport rep;
    const double lc = critical_coupling(p_base);
    rep.lambda_c = lc;
    std::vector<double> grid = lambda_grid;
    grid.push_back(lc);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [lc](double a, double b) { return std::abs(a - b) <= 1e-12 * lc; }),
               grid.end());
    const auto it = std::find_if(grid.begin(), grid.end(),
                                 [lc](double x) { return std::abs(x - lc) <= 1e-12 * lc; });
    const std::size_t c = static_cast<std::size_t>(it - grid.begin());
    if (c < 2 || c + 2 >= grid.size()) {
        throw InsufficientPoints("kink detection needs two grid nodes on each side of lambda_c");
    }
    std::vector<double> f(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        DickeParams p = p_base;
        p.lambda = grid[k];
        const DickePoint pt = dicke_point(p);
        f[k] = pt.result.budget.Pi_u;
        rep.max_abs_pi_u = std::max(rep.max_abs_pi_u, std::abs(f[k]));
        rep.max_pi_d = std::max(rep.max_pi_d, pt.result.budget.Pi_d);
    }
    for (std::size_t k = 1; k < grid.size(); ++k)
        rep.resolution = std::max(rep.resolution, std::abs(f[k] - f[k - 1]));

    // derivative at x0 of the quadratic through (x0, x1, x2)
    auto three_point = [](double x0, double x1, double x2, double f0, double f1, double f2) {
        const double h1 = x1 - x0, h2 = x2 - x0;
        return (f0 * (-(h1 + h2) / (h1 * h2)) + f1 * (h2 / (h1 * (h2 - h1))) -
                f2 * (h1 / (h2 * (h2 - h1))));
    };
    const double fl1 = (f[c] - f[c - 1]) / (grid[c] - grid[c - 1]);
    const double fr1 = (f[c + 1] - f[c]) / (grid[c + 1] - grid[c]);
    rep.left_slope = three_point(grid[c], grid[c - 1], grid[c - 2], f[c], f[c - 1], f[c - 2]);
    rep.right_slope = three_point(grid[c], grid[c + 1], grid[c + 2], f[c], f[c + 1], f[c + 2]);
    rep.noise_floor = std::abs(rep.left_slope - fl1) + std::abs(rep.right_slope - fr1);

    // linear extrapolation to lambda_c from the two outer nodes on each side
    const double sl = (f[c - 1] - f[c - 2]) / (grid[c - 1] - grid[c - 2]);
    const double sr = (f[c + 2] - f[c + 1]) / (grid[c + 2] - grid[c + 1]);
    const double left_at_c = f[c - 1] + sl * (lc - grid[c - 1]);
    const double right_at_c = f[c + 1] + sr * (lc - grid[c + 1]);
    rep.jump = std::abs(left_at_c - right_at_c);
    return rep;
}

}  // namespace wehrlflux
