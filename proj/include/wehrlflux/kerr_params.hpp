#pragma once

#include <optional>
#include <vector>

#include "wehrlflux/fock_algebra.hpp"

namespace wehrlflux {

/// Driven Kerr resonator with loss. The pump amplitude is eps * sqrt(N).
struct KerrParams {
    double detuning = -2.0;
    double nonlinearity = 1.0;
    double kappa = 0.5;
    double eps = 0.0;
    int N = 1;

    double drive() const;
    /// Throws InvalidArgument on non-finite values, kappa <= 0, u < 0, eps < 0 or N < 1.
    /// u = 0 is the linear (empty) cavity.
    void validate() const;
};

/// Photon-number turning points (n_minus < n_plus) of the intensive mean-field
/// curve eps^2 = n((Delta + u n)^2 + kappa^2). Empty when the curve is monotone.
struct TurningPoints {
    double n_minus;
    double n_plus;
};
std::optional<TurningPoints> kerr_turning_points(double detuning, double nonlinearity, double kappa);

/// eps on the mean-field curve at intensive photon number n.
double kerr_drive_at(double detuning, double nonlinearity, double kappa, double n);

/// All non-negative intensive photon numbers solving the mean-field curve at
/// drive eps, ascending. One or three entries (two at a turning point).
std::vector<double> kerr_mean_field_photons(double detuning, double nonlinearity, double kappa,
                                            double eps);

/// Smallest cutoff accepted for p: the cutoff rule evaluated at the larger of
/// the upper mean-field root and the upper turning point.
int kerr_required_cutoff(const KerrParams& p, const CutoffRule& rule = {});

}  // namespace wehrlflux
