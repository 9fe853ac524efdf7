#include "wehrlflux/kerr_params.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "wehrlflux/errors.hpp"

namespace wehrlflux {

double KerrParams::drive() const { return eps * std::sqrt(static_cast<double>(N)); }

void KerrParams::validate() const {
    require_finite(detuning, "detuning");
    require_finite(nonlinearity, "nonlinearity");
    require_finite(kappa, "kappa");
    require_finite(eps, "eps");
    if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
    if (!(nonlinearity >= 0.0)) throw InvalidArgument("nonlinearity must be non-negative");
    if (eps < 0.0) throw InvalidArgument("eps must be non-negative");
    if (N < 1) throw InvalidArgument("N must be at least 1");
}

std::optional<TurningPoints> kerr_turning_points(double detuning, double nonlinearity,
                                                 double kappa) {
    // d(eps^2)/dn = 3u^2 n^2 + 4 u Delta n + Delta^2 + kappa^2
    const double disc = detuning * detuning - 3.0 * kappa * kappa;
    if (disc <= 0.0 || nonlinearity <= 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    const double lo = (-2.0 * detuning - root) / (3.0 * nonlinearity);
    const double hi = (-2.0 * detuning + root) / (3.0 * nonlinearity);
    if (lo <= 0.0) return std::nullopt;
    return TurningPoints{lo, hi};
}

double kerr_drive_at(double detuning, double nonlinearity, double kappa, double n) {
    const double shift = detuning + nonlinearity * n;
    return std::sqrt(n * (shift * shift + kappa * kappa));
}

std::vector<double> kerr_mean_field_photons(double detuning, double nonlinearity, double kappa,
                                            double eps) {
    if (eps == 0.0) return {0.0};
    const double eps2 = eps * eps;
    auto f = [&](double n) {
        const double shift = detuning + nonlinearity * n;
        return n * (shift * shift + kappa * kappa) - eps2;
    };
    // every root lies below eps^2 / kappa^2
    const double upper = eps2 / (kappa * kappa);
    std::vector<double> nodes{0.0};
    if (auto tp = kerr_turning_points(detuning, nonlinearity, kappa)) {
        if (tp->n_minus < upper) nodes.push_back(tp->n_minus);
        if (tp->n_plus < upper) nodes.push_back(tp->n_plus);
    }
    nodes.push_back(upper);

    std::vector<double> roots;
    boost::math::tools::eps_tolerance<double> tol(52);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const double a = nodes[i];
        const double b = nodes[i + 1];
        const double fa = f(a);
        const double fb = f(b);
        if (fb == 0.0) {
            roots.push_back(b);
            continue;
        }
        if ((fa < 0.0) == (fb < 0.0) || fa == 0.0) continue;
        std::uintmax_t iters = 200;
        auto bracket = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
        roots.push_back(0.5 * (bracket.first + bracket.second));
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double x, double y) { return std::abs(x - y) <= 1e-14 * (1.0 + y); }),
                roots.end());
    return roots;
}

int kerr_required_cutoff(const KerrParams& p, const CutoffRule& rule) {
    p.validate();
    const auto roots = kerr_mean_field_photons(p.detuning, p.nonlinearity, p.kappa, p.eps);
    double n_ref = roots.back();
    if (auto tp = kerr_turning_points(p.detuning, p.nonlinearity, p.kappa)) {
        n_ref = std::max(n_ref, tp->n_plus);
    }
    return fock_cutoff(p.N, n_ref, rule);
}

}  // namespace wehrlflux
