#include "wehrlflux/arnoldi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "wehrlflux/errors.hpp"

namespace wehrlflux {

ArnoldiResult arnoldi_dominant(const std::function<void(const CVector&, CVector&)>& op,
                               const CVector& start, const ArnoldiOptions& opts) {
    const Eigen::Index n = start.size();
    const double start_norm = start.norm();
    if (!(start_norm > 0.0)) throw InvalidArgument("Arnoldi start vector is zero");

    const int m = static_cast<int>(std::min<Eigen::Index>(opts.krylov_dim, n));
    const int nev = std::min(opts.nev, std::max(1, m - 2));

    CMatrix V = CMatrix::Zero(n, m + 1);
    CMatrix G = CMatrix::Zero(m + 1, m);  // projected operator plus residual row
    V.col(0) = start / start_norm;
    int k = 0;

    ArnoldiResult result;
    CVector w(n);
    for (int restart = 0; restart <= opts.max_restarts; ++restart) {
        int m_eff = m;
        for (int j = k; j < m; ++j) {
            op(V.col(j), w);
            ++result.applications;
            // classical Gram-Schmidt, applied twice
            for (int pass = 0; pass < 2; ++pass) {
                const CVector h = V.leftCols(j + 1).adjoint() * w;
                w.noalias() -= V.leftCols(j + 1) * h;
                G.col(j).head(j + 1) += h;
            }
            const double beta = w.norm();
            G(j + 1, j) = beta;
            if (beta <= 1e-14 * G.col(j).head(j + 1).norm()) {
                // invariant subspace found
                m_eff = j + 1;
                G(j + 1, j) = 0.0;
                break;
            }
            V.col(j + 1) = w / beta;
        }

        const CMatrix H = G.topLeftCorner(m_eff, m_eff);
        Eigen::ComplexEigenSolver<CMatrix> es(H);
        if (es.info() != Eigen::Success) throw ConvergenceError("Ritz eigenproblem failed");
        std::vector<int> order(m_eff);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
        });

        const int want = std::min(nev, m_eff);
        const Complex tail = m_eff < m ? Complex(0.0) : G(m, m - 1);
        bool done = true;
        for (int i = 0; i < want; ++i) {
            const int idx = order[i];
            const CVector y = es.eigenvectors().col(idx).normalized();
            const double res = std::abs(tail) * std::abs(y(m_eff - 1));
            if (res > opts.tol * std::abs(es.eigenvalues()(idx))) done = false;
        }
        result.values.clear();
        for (int i = 0; i < want; ++i) result.values.push_back(es.eigenvalues()(order[i]));
        result.restarts = restart;
        if (done || m_eff < m) {
            result.converged = true;
            return result;
        }

        // thick restart on the wanted Ritz subspace
        CMatrix Y(m_eff, want);
        for (int i = 0; i < want; ++i) Y.col(i) = es.eigenvectors().col(order[i]);
        Eigen::HouseholderQR<CMatrix> qr(Y);
        const CMatrix Q = qr.householderQ() * CMatrix::Identity(m_eff, want);
        const CMatrix T = Q.adjoint() * H * Q;
        const Eigen::RowVectorXcd b = tail * Q.row(m_eff - 1);
        const CVector next = V.col(m);
        const CMatrix kept = V.leftCols(m_eff) * Q;
        V.leftCols(want) = kept;
        V.col(want) = next;
        G.setZero();
        G.topLeftCorner(want, want) = T;
        G.row(want).head(want) = b;
        k = want;
    }
    result.converged = false;
    return result;
}

}  // namespace wehrlflux
