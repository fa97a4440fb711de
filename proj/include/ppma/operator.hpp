// ppma - the nonlinear operator and its derivatives: assembly of Z = X + U
// over a grid, the log-volume residual, linearization coefficients G^{ij},
// the concavity tensor and its restricted variant, Ric_p, and the
// p-plurisubharmonicity test.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ppma/fields.hpp"
#include "ppma/forms.hpp"
#include "ppma/grid.hpp"
#include "ppma/multiindex.hpp"

namespace ppma {

// Raised-index inverse entry Z^{I \bar J} for a Hermitian Z with inverse Zinv:
// Z^{I \bar J} Z_{K \bar J} = delta_{IK}, i.e. Z^{I \bar J} = Zinv(J, I).
inline Complex inv_up(const Eigen::MatrixXcd& zinv, int rI, int rJ) {
    return zinv(rJ, rI);
}

inline Eigen::MatrixXcd hermitian_inverse(const Eigen::MatrixXcd& Z, const char* who) {
    double mn = min_hermitian_eigenvalue(Z);
    if (mn <= pd_floor(Z.real().trace(), static_cast<int>(Z.rows())))
        throw PositivityError(std::string(who) + ": matrix not positive-definite", mn);
    Eigen::LLT<Eigen::MatrixXcd> llt(Z);
    return llt.solve(Eigen::MatrixXcd::Identity(Z.rows(), Z.cols()));
}

// Z = X + sqrt(-1) dd~u ^ omega^{p-1} pointwise.
inline PPField build_Z(const HermitianField& hess_u, const PPField& X,
                       const HermitianField& g, const IndexTable& table_p,
                       const IndexTable& table_pm1) {
    if (hess_u.grid.points() != X.grid.points() || g.grid.points() != X.grid.points())
        throw ParameterError("build_Z: field shapes disagree");
    PPField Z = X;
    const long P = X.grid.points();
    for (long pt = 0; pt < P; ++pt) {
        Eigen::MatrixXcd theta = compound(g.at[pt], table_pm1);
        Z.at[pt] += wedge_11(hess_u.at[pt], theta, table_p, table_pm1);
    }
    return Z;
}

// Pointwise residual (n/(pN)) log det Z - log det g - psi - b. The density
// calibration constant is 1 in this matrix convention: for u = 0 and
// X = omega^p the first two terms cancel by Sylvester-Franke.
inline RealField residual(const PPField& Z, const HermitianField& g, const RealField& psi,
                          double b) {
    const long P = Z.grid.points();
    const int N = static_cast<int>(Z.at[0].rows());
    const double expo = double(Z.n) / (double(Z.p) * N);
    RealField r(P);
    for (long pt = 0; pt < P; ++pt) {
        double mn = min_hermitian_eigenvalue(Z.at[pt]);
        if (mn <= pd_floor(Z.at[pt].real().trace(), N))
            throw PositivityError("residual: Z not positive-definite at grid point", mn, pt);
        double logdetZ = Eigen::PartialPivLU<Eigen::MatrixXcd>(Z.at[pt])
                             .matrixLU().diagonal().array().abs().log().sum();
        double logdetg = Eigen::PartialPivLU<Eigen::MatrixXcd>(g.at[pt])
                             .matrixLU().diagonal().array().abs().log().sum();
        r(pt) = expo * logdetZ - logdetg - psi(pt) - b;
    }
    return r;
}

// First derivatives of log det Z with respect to the complex Hessian:
//   G^{ij} = sum over I' not containing i, j of signed Z^{I'_i \bar I'_j}.
// For p = 1 this is the raised-index inverse of Z.
inline Eigen::MatrixXcd linearization_at(const Eigen::MatrixXcd& Z, const IndexTable& table_p,
                                         const IndexTable& table_pm1) {
    const int n = table_p.n();
    Eigen::MatrixXcd zinv = hermitian_inverse(Z, "linearization");
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(n, n);
    for (int r = 0; r < table_pm1.size(); ++r) {
        const MultiIndex& Ip = table_pm1[r];
        for (int i = 1; i <= n; ++i) {
            if (std::binary_search(Ip.begin(), Ip.end(), i)) continue;
            auto [Ii, si] = insert_with_sign(Ip, i);
            int rIi = table_p.rank(Ii);
            for (int j = 1; j <= n; ++j) {
                if (std::binary_search(Ip.begin(), Ip.end(), j)) continue;
                auto [Ij, sj] = insert_with_sign(Ip, j);
                G(i - 1, j - 1) += double(si * sj) * inv_up(zinv, rIi, table_p.rank(Ij));
            }
        }
    }
    return G;
}

inline LinearizationField linearization(const PPField& Z, const IndexTable& table_p,
                                        const IndexTable& table_pm1) {
    LinearizationField G = LinearizationField::zero(Z.grid, Z.n);
    for (long pt = 0; pt < Z.grid.points(); ++pt) {
        try {
            G.at[pt] = linearization_at(Z.at[pt], table_p, table_pm1);
        } catch (PositivityError& e) {
            throw PositivityError(e.what(), e.min_eigenvalue, pt);
        }
    }
    return G;
}

// Second derivatives G^{ij,kl} of log det Z, returned as an n^2 x n^2 matrix
// indexed by (i*n + j, k*n + l). The quadratic form
// sum G^{ij,kl} eta_{ij} eta_{kl} is real and <= 0 for Hermitian eta.
inline Eigen::MatrixXcd concavity_hessian(const PPMatrix& Z, const IndexTable& table_p,
                                          const IndexTable& table_pm1) {
    const int n = table_p.n();
    Eigen::MatrixXcd zinv = hermitian_inverse(Z.data, "concavity_hessian");
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(n * n, n * n);
    for (int ra = 0; ra < table_pm1.size(); ++ra) {
        const MultiIndex& Ip = table_pm1[ra];
        for (int i = 1; i <= n; ++i) {
            if (std::binary_search(Ip.begin(), Ip.end(), i)) continue;
            auto [Ii, si] = insert_with_sign(Ip, i);
            int rIi = table_p.rank(Ii);
            for (int j = 1; j <= n; ++j) {
                if (std::binary_search(Ip.begin(), Ip.end(), j)) continue;
                auto [Ij, sj] = insert_with_sign(Ip, j);
                int rIj = table_p.rank(Ij);
                for (int rb = 0; rb < table_pm1.size(); ++rb) {
                    const MultiIndex& Jp = table_pm1[rb];
                    for (int k = 1; k <= n; ++k) {
                        if (std::binary_search(Jp.begin(), Jp.end(), k)) continue;
                        auto [Jk, sk] = insert_with_sign(Jp, k);
                        int rJk = table_p.rank(Jk);
                        for (int l = 1; l <= n; ++l) {
                            if (std::binary_search(Jp.begin(), Jp.end(), l)) continue;
                            auto [Jl, sl] = insert_with_sign(Jp, l);
                            int rJl = table_p.rank(Jl);
                            T((i - 1) * n + (j - 1), (k - 1) * n + (l - 1)) -=
                                double(si * sj * sk * sl) * inv_up(zinv, rIi, rJl) *
                                inv_up(zinv, rJk, rIj);
                        }
                    }
                }
            }
        }
    }
    return T;
}

// Restricted tensor H: insertion targets I'_i, J'_l must lie in S1 and
// J'_k, I'_j in S2 (subsets given as rank lists into table_p).
inline Eigen::MatrixXcd restricted_hessian(const PPMatrix& Z, const IndexTable& table_p,
                                           const IndexTable& table_pm1,
                                           const std::vector<int>& S1,
                                           const std::vector<int>& S2) {
    const int n = table_p.n();
    const int N = table_p.size();
    std::vector<char> in1(N, 0), in2(N, 0);
    for (int r : S1) in1.at(r) = 1;
    for (int r : S2) in2.at(r) = 1;
    Eigen::MatrixXcd zinv = hermitian_inverse(Z.data, "restricted_hessian");
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(n * n, n * n);
    for (int ra = 0; ra < table_pm1.size(); ++ra) {
        const MultiIndex& Ip = table_pm1[ra];
        for (int i = 1; i <= n; ++i) {
            if (std::binary_search(Ip.begin(), Ip.end(), i)) continue;
            auto [Ii, si] = insert_with_sign(Ip, i);
            int rIi = table_p.rank(Ii);
            if (!in1[rIi]) continue;
            for (int j = 1; j <= n; ++j) {
                if (std::binary_search(Ip.begin(), Ip.end(), j)) continue;
                auto [Ij, sj] = insert_with_sign(Ip, j);
                int rIj = table_p.rank(Ij);
                if (!in2[rIj]) continue;
                for (int rb = 0; rb < table_pm1.size(); ++rb) {
                    const MultiIndex& Jp = table_pm1[rb];
                    for (int k = 1; k <= n; ++k) {
                        if (std::binary_search(Jp.begin(), Jp.end(), k)) continue;
                        auto [Jk, sk] = insert_with_sign(Jp, k);
                        int rJk = table_p.rank(Jk);
                        if (!in2[rJk]) continue;
                        for (int l = 1; l <= n; ++l) {
                            if (std::binary_search(Jp.begin(), Jp.end(), l)) continue;
                            auto [Jl, sl] = insert_with_sign(Jp, l);
                            int rJl = table_p.rank(Jl);
                            if (!in1[rJl]) continue;
                            T((i - 1) * n + (j - 1), (k - 1) * n + (l - 1)) -=
                                double(si * sj * sk * sl) * inv_up(zinv, rIi, rJl) *
                                inv_up(zinv, rJk, rIj);
                        }
                    }
                }
            }
        }
    }
    return T;
}

// Quadratic form of an n^2 x n^2 tensor against a Hermitian eta (no
// conjugation on the second slot, matching the index placement).
inline double quadratic_form(const Eigen::MatrixXcd& T, const Eigen::MatrixXcd& eta) {
    const int n = static_cast<int>(eta.rows());
    Complex s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    s += T(i * n + j, k * n + l) * eta(i, j) * eta(k, l);
    return s.real();
}

// Ric_p(Omega) = - sqrt(-1) dd~ log mu_Omega ^ omega^{p-1}, with the Hessian
// of the log-density taken spectrally on the periodic grid.
inline PPField ric_p(const PPField& omega, const HermitianField& g, const Spectral& sp,
                     const IndexTable& table_p, const IndexTable& table_pm1) {
    const long P = omega.grid.points();
    RealField logmu(P);
    for (long pt = 0; pt < P; ++pt) {
        PPMatrix M{omega.n, omega.p, omega.at[pt]};
        try {
            logmu(pt) = log_volume_density(M);
        } catch (PositivityError& e) {
            throw PositivityError(e.what(), e.min_eigenvalue, pt);
        }
    }
    HermitianField hess = spectral_hessian(logmu, omega.grid, sp);
    PPField out;
    out.grid = omega.grid;
    out.n = omega.n;
    out.p = omega.p;
    out.at.resize(P);
    for (long pt = 0; pt < P; ++pt) {
        Eigen::MatrixXcd theta = compound(g.at[pt], table_pm1);
        out.at[pt] = -wedge_11(hess.at[pt], theta, table_p, table_pm1);
    }
    return out;
}

struct PshResult {
    bool ok = false;
    double worst_sum = 0.0;
};

// Sum of the p smallest Hessian eigenvalues must be positive everywhere.
inline PshResult p_psh_check(const HermitianField& hess_u, int p) {
    PshResult res;
    bool first = true;
    for (const auto& H : hess_u.at) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
        double s = es.eigenvalues().head(p).sum();
        if (first || s < res.worst_sum) res.worst_sum = s;
        first = false;
    }
    res.ok = res.worst_sum > 0.0;
    return res;
}

struct TraceCheck {
    double identity_gap = 0.0;   // | sum Z^{IJ} Z_{IJ} - N |
    double alpha = 0.0;          // smallest eigenvalue of X (orthonormal frame)
    double coefficient_slack = 0.0;  // sum Z^{IJ} X_{IJ} - alpha * sum Z^{II}, >= 0
};

// Checks N = Z^{IJ} Z_{IJ} for Z = X + U and the lower bound
// sum Z^{IJ} X_{IJ} >= alpha * tr(Z^{-1}).
inline TraceCheck trace_identity_check(const PPMatrix& Z, const PPMatrix& X,
                                       const PPMatrix& U) {
    const int N = static_cast<int>(Z.data.rows());
    Eigen::MatrixXcd zinv = hermitian_inverse(Z.data, "trace_identity_check");
    TraceCheck out;
    out.identity_gap = std::abs((zinv * (X.data + U.data)).trace().real() - double(N));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(X.data, Eigen::EigenvaluesOnly);
    out.alpha = es.eigenvalues().minCoeff();
    double lhs = (zinv * X.data).trace().real();
    out.coefficient_slack = lhs - out.alpha * zinv.trace().real();
    return out;
}

} // namespace ppma
