#pragma once

#include <functional>
#include <vector>

#include "wehrlflux/fock_algebra.hpp"

namespace wehrlflux {

struct ArnoldiOptions {
    int nev = 12;          // eigenvalues wanted (largest magnitude)
    int krylov_dim = 40;   // basis size before a restart
    int max_restarts = 60;
    double tol = 1e-10;    // residual relative to |theta|
};

struct ArnoldiResult {
    std::vector<Complex> values;  // sorted by decreasing magnitude
    int restarts = 0;
    int applications = 0;
    bool converged = false;
};

/// Thick-restarted Arnoldi for the dominant eigenvalues of a linear map
/// given only through its action. `start` must be non-zero.
ArnoldiResult arnoldi_dominant(const std::function<void(const CVector&, CVector&)>& op,
                               const CVector& start, const ArnoldiOptions& opts = {});

}  // namespace wehrlflux
