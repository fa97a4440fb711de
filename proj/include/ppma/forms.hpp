// ppma - pointwise (p,p)-form algebra: N x N coefficient matrices indexed by
// multi-index ranks, compound (exterior-power) matrices, the (1,1)-wedge,
// volume densities, relative eigenvalues and positivity probes.
//
// Matrix convention: the matrix of omega^p is the p x p minor matrix of g
// (no factorial prefactors anywhere), and the matrix of a ^ Theta for a (1,1)
// form a is the signed insertion contraction below. With this convention
// volume_density(minor_matrix(g, p)) = det(g), so the density-level
// calibration constant is 1.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "ppma/errors.hpp"
#include "ppma/multiindex.hpp"
#include "ppma/rng.hpp"

namespace ppma {

using Complex = std::complex<double>;

// Hermitian N x N coefficient matrix of a real (p,p)-form at a point.
struct PPMatrix {
    int n = 0, p = 0;
    Eigen::MatrixXcd data;

    static PPMatrix zero(const IndexTable& table) {
        PPMatrix out;
        out.n = table.n();
        out.p = table.p();
        out.data = Eigen::MatrixXcd::Zero(table.size(), table.size());
        return out;
    }
};

// Relative eigenvalues of a (p,p)-form against omega^p, descending.
struct Spectrum {
    Eigen::VectorXd values;
};

// Scale-aware positive-definiteness floor.
inline double pd_floor(double trace, int dim) {
    return 1e-10 * (1.0 + trace / dim);
}

inline double min_hermitian_eigenvalue(const Eigen::MatrixXcd& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// p-th compound matrix C_p(A): entry (I, J) is the p x p minor of A with rows
// I and columns J. Represents A on the p-th exterior power; functorial.
template <typename Derived>
Eigen::MatrixXcd compound(const Eigen::MatrixBase<Derived>& A, const IndexTable& table) {
    const int N = table.size();
    const int p = table.p();
    Eigen::MatrixXcd out(N, N);
    Eigen::MatrixXcd sub(p, p);
    for (int a = 0; a < N; ++a) {
        const MultiIndex& I = table[a];
        for (int b = 0; b < N; ++b) {
            const MultiIndex& J = table[b];
            for (int r = 0; r < p; ++r)
                for (int c = 0; c < p; ++c) sub(r, c) = A(I[r] - 1, J[c] - 1);
            out(a, b) = sub.determinant();
        }
    }
    return out;
}

template <typename Derived>
PPMatrix compound_pp(const Eigen::MatrixBase<Derived>& A, const IndexTable& table) {
    PPMatrix out;
    out.n = table.n();
    out.p = table.p();
    out.data = compound(A, table);
    return out;
}

// Matrix of omega^p for the metric g (minor matrix = compound of a Hermitian
// matrix).
template <typename Derived>
PPMatrix minor_matrix(const Eigen::MatrixBase<Derived>& g, const IndexTable& table) {
    return compound_pp(g, table);
}

// Coefficient matrix of sqrt(-1) a_{ij} dz_i ^ dz_j ^ Theta for a Hermitian
// n x n matrix a and a degree-(p-1) form Theta:
//   out[I'_i][J'_j] += (-1)^{(i|I'_i)} (-1)^{(j|J'_j)} a(i,j) Theta[I'][J'].
// table_out has degree p, table_in = degree p-1 (p-1 = 0 allowed).
inline Eigen::MatrixXcd wedge_11(const Eigen::MatrixXcd& a,
                                 const Eigen::MatrixXcd& theta,
                                 const IndexTable& table_out,
                                 const IndexTable& table_in) {
    const int n = table_out.n();
    const int p = table_out.p();
    if (table_in.n() != n || table_in.p() != p - 1)
        throw ParameterError("wedge_11: degree mismatch between tables");
    if (a.rows() != n || a.cols() != n)
        throw ParameterError("wedge_11: (1,1) coefficient matrix has wrong size");
    if (theta.rows() != table_in.size() || theta.cols() != table_in.size())
        throw ParameterError("wedge_11: degree-(p-1) matrix has wrong size");

    const int Nin = table_in.size();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(table_out.size(), table_out.size());
    for (int ra = 0; ra < Nin; ++ra) {
        const MultiIndex& Ip = table_in[ra];
        for (int i = 1; i <= n; ++i) {
            if (std::binary_search(Ip.begin(), Ip.end(), i)) continue;
            auto [I, si] = insert_with_sign(Ip, i);
            int rI = table_out.rank(I);
            for (int rb = 0; rb < Nin; ++rb) {
                const MultiIndex& Jp = table_in[rb];
                const Complex th = theta(ra, rb);
                if (th == Complex(0.0, 0.0)) continue;
                for (int j = 1; j <= n; ++j) {
                    if (std::binary_search(Jp.begin(), Jp.end(), j)) continue;
                    auto [J, sj] = insert_with_sign(Jp, j);
                    out(rI, table_out.rank(J)) += double(si * sj) * a(i - 1, j - 1) * th;
                }
            }
        }
    }
    return out;
}

inline PPMatrix wedge_11(const Eigen::MatrixXcd& a, const PPMatrix& theta,
                         const IndexTable& table_out, const IndexTable& table_in) {
    PPMatrix out;
    out.n = table_out.n();
    out.p = table_out.p();
    out.data = wedge_11(a, theta.data, table_out, table_in);
    return out;
}

// det(Omega)^{n/(pN)} for a positive-definite coefficient matrix.
inline double volume_density(const PPMatrix& omega) {
    const int N = static_cast<int>(omega.data.rows());
    double min_eig = min_hermitian_eigenvalue(omega.data);
    if (min_eig <= pd_floor(omega.data.real().trace(), N))
        throw PositivityError("volume_density: matrix not positive-definite", min_eig);
    double logdet = Eigen::PartialPivLU<Eigen::MatrixXcd>(omega.data)
                        .matrixLU()
                        .diagonal()
                        .array()
                        .abs()
                        .log()
                        .sum();
    return std::exp(logdet * double(omega.n) / (double(omega.p) * N));
}

inline double log_volume_density(const PPMatrix& omega) {
    const int N = static_cast<int>(omega.data.rows());
    double min_eig = min_hermitian_eigenvalue(omega.data);
    if (min_eig <= pd_floor(omega.data.real().trace(), N))
        throw PositivityError("log_volume_density: matrix not positive-definite", min_eig);
    double logdet = Eigen::PartialPivLU<Eigen::MatrixXcd>(omega.data)
                        .matrixLU()
                        .diagonal()
                        .array()
                        .abs()
                        .log()
                        .sum();
    return logdet * double(omega.n) / (double(omega.p) * N);
}

// Generalized eigenvalues of (Omega, minor_matrix(g, p)), descending.
inline Spectrum relative_eigenvalues(const PPMatrix& omega, const Eigen::MatrixXcd& g,
                                     const IndexTable& table) {
    double g_min = min_hermitian_eigenvalue(g);
    if (g_min <= pd_floor(g.real().trace(), static_cast<int>(g.rows())))
        throw PositivityError("relative_eigenvalues: metric not positive-definite", g_min);
    Eigen::MatrixXcd W = compound(g, table);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es(omega.data, W,
                                                                  Eigen::EigenvaluesOnly);
    Spectrum s;
    s.values = es.eigenvalues().reverse();
    return s;
}

struct PositivityProbeResult {
    bool all_positive = true;
    double min_pairing = 0.0;
};

// Pairs Omega against random decomposable strongly positive (n-p, n-p)
// covectors: xi_I = (-1)^{(I|I^c)} alpha_{I^c} with alpha_K the minor
// coefficients of alpha_1 ^ ... ^ alpha_{n-p}.
inline PositivityProbeResult current_positivity_probe(const PPMatrix& omega,
                                                      const IndexTable& table, int trials,
                                                      std::uint64_t rng_seed) {
    if (trials < 1) throw ParameterError("current_positivity_probe: trials >= 1");
    const int n = table.n();
    const int p = table.p();
    const int q = n - p;
    const int N = table.size();
    IndexTable table_q = IndexTable::build(n, q);
    CounterRng rng(rng_seed);

    PositivityProbeResult res;
    bool first = true;
    Eigen::MatrixXcd alpha(q, n);
    Eigen::MatrixXcd sub(q, q);
    Eigen::VectorXcd xi(N);
    for (int t = 0; t < trials; ++t) {
        for (int r = 0; r < q; ++r)
            for (int c = 0; c < n; ++c) alpha(r, c) = rng.complex_gaussian();
        for (int a = 0; a < N; ++a) {
            const MultiIndex& I = table[a];
            MultiIndex Ic = complement(I, n);
            for (int r = 0; r < q; ++r)
                for (int c = 0; c < q; ++c) sub(r, c) = alpha(r, Ic[c] - 1);
            xi(a) = double(complement_sign(I, n)) * sub.determinant();
        }
        double pairing = (xi.adjoint() * omega.data * xi).value().real();
        if (first || pairing < res.min_pairing) res.min_pairing = pairing;
        first = false;
        if (pairing <= 0.0) res.all_positive = false;
    }
    return res;
}

} // namespace ppma
