// ppma - seeded, repeatable verification campaigns over the exactly
// checkable algebraic identities: the Hermitian inverse diagonal bound, the
// compound-matrix determinant identities, and the operator derivative
// structure (ellipticity, concavity, finite-difference agreement).
#pragma once

#include <chrono>
#include <string>

#include "ppma/operator.hpp"
#include "ppma/problem.hpp"
#include "ppma/rng.hpp"

namespace ppma {

struct SuiteReport {
    std::string suite;
    int trials = 0;
    int failures = 0;
    double worst_margin = 0.0;  // most adverse signed margin seen (pass needs >= 0 - tol)
    std::uint64_t seed = 0;
    double duration_ms = 0.0;

    bool passed() const { return failures == 0; }
};

// Random positive-definite Hermitian matrix: B B* + eps I with complex
// Gaussian B, conditioned away from singularity.
inline Eigen::MatrixXcd random_pd_hermitian(CounterRng& rng, int dim, double eps = 1e-3) {
    Eigen::MatrixXcd B(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) B(i, j) = rng.complex_gaussian();
    return B * B.adjoint() + eps * Eigen::MatrixXcd::Identity(dim, dim);
}

inline Eigen::MatrixXcd random_hermitian(CounterRng& rng, int dim) {
    Eigen::MatrixXcd B(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) B(i, j) = rng.complex_gaussian();
    return 0.5 * (B + B.adjoint());
}

// a^{ii} >= 1 / a_{ii} for positive-definite Hermitian A.
inline SuiteReport run_inversion_lemma_suite(int trials, std::uint64_t seed, int n) {
    if (trials < 1) throw ParameterError("run_inversion_lemma_suite: trials >= 1");
    auto t0 = std::chrono::steady_clock::now();
    SuiteReport rep;
    rep.suite = "inversion-lemma";
    rep.trials = trials;
    rep.seed = seed;
    CounterRng rng(seed);
    bool first = true;
    for (int t = 0; t < trials; ++t) {
        Eigen::MatrixXcd A = random_pd_hermitian(rng, n);
        Eigen::MatrixXcd Ainv = A.inverse();
        for (int i = 0; i < n; ++i) {
            double margin = (Ainv(i, i).real() * A(i, i).real()) - 1.0;
            if (first || margin < rep.worst_margin) rep.worst_margin = margin;
            first = false;
            if (margin < -1e-12) ++rep.failures;
        }
    }
    rep.duration_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// Sylvester-Franke, compound functoriality, trace identity, and the
// A-coefficient lower bound, all at 1e-10 relative.
inline SuiteReport run_algebra_suite(int trials, std::uint64_t seed, int n, int p) {
    auto t0 = std::chrono::steady_clock::now();
    SuiteReport rep;
    rep.suite = "algebra";
    rep.trials = trials;
    rep.seed = seed;
    CounterRng rng(seed);
    IndexTable table = build_index_table(n, p);
    const int N = table.size();
    const double tol = 1e-10;
    bool first = true;
    auto record = [&](double margin) {
        if (first || margin < rep.worst_margin) rep.worst_margin = margin;
        first = false;
        if (margin < -tol) ++rep.failures;
    };
    for (int t = 0; t < trials; ++t) {
        // Sylvester-Franke: det(C_p(A))^{n/(pN)} = det(A) for PD A
        Eigen::MatrixXcd A = random_pd_hermitian(rng, n);
        double detA = A.determinant().real();
        double detC = compound(A, table).determinant().real();
        double sf = std::abs(std::pow(detC, double(n) / (double(p) * N)) - detA) /
                    std::abs(detA);
        record(tol - sf);

        // functoriality: C_p(AB) = C_p(A) C_p(B) for general complex A, B
        Eigen::MatrixXcd M1(n, n), M2(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                M1(i, j) = rng.complex_gaussian();
                M2(i, j) = rng.complex_gaussian();
            }
        Eigen::MatrixXcd lhs = compound(Eigen::MatrixXcd(M1 * M2), table);
        Eigen::MatrixXcd rhs = compound(M1, table) * compound(M2, table);
        double fn = (lhs - rhs).norm() / std::max(1.0, rhs.norm());
        record(tol - fn);

        // trace identity and A-coefficient bound on a random split Z = X + U
        PPMatrix X{n, p, random_pd_hermitian(rng, N)};
        Eigen::MatrixXcd eta = 0.2 * random_hermitian(rng, n);
        IndexTable table_pm1 = IndexTable::build(n, p - 1);
        Eigen::MatrixXcd U =
            wedge_11(eta, Eigen::MatrixXcd(compound(Eigen::MatrixXcd::Identity(n, n), table_pm1)),
                     table, table_pm1);
        // scale the Hessian part so the split stays inside the positive cone
        double head = min_hermitian_eigenvalue(X.data);
        double unorm = U.operatorNorm();
        if (unorm > 0.5 * head) U *= 0.5 * head / unorm;
        PPMatrix Z{n, p, X.data + U};
        PPMatrix Upp{n, p, U};
        TraceCheck tc = trace_identity_check(Z, X, Upp);
        record(tol - tc.identity_gap / N);
        record(tc.coefficient_slack + tol);
    }
    rep.duration_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// Ellipticity, concavity, restricted concavity and the finite-difference
// gradient check at random positive Z.
inline SuiteReport run_operator_suite(int trials, std::uint64_t seed, int n, int p) {
    auto t0 = std::chrono::steady_clock::now();
    SuiteReport rep;
    rep.suite = "operator";
    rep.trials = trials;
    rep.seed = seed;
    CounterRng rng(seed);
    IndexTable table = build_index_table(n, p);
    IndexTable table_pm1 = IndexTable::build(n, p - 1);
    const int N = table.size();
    Eigen::MatrixXcd theta_flat = compound(Eigen::MatrixXcd::Identity(n, n), table_pm1);
    bool first = true;
    auto record = [&](double margin) {
        if (first || margin < rep.worst_margin) rep.worst_margin = margin;
        first = false;
        if (margin < 0.0) ++rep.failures;
    };
    for (int t = 0; t < trials; ++t) {
        // unit shift keeps Z conditioned so finite-difference truncation
        // stays well under the comparison tolerance
        PPMatrix Z{n, p, random_pd_hermitian(rng, N, 1.0)};

        // ellipticity: min eigenvalue of G^{ij} strictly positive
        Eigen::MatrixXcd G = linearization_at(Z.data, table, table_pm1);
        record(min_hermitian_eigenvalue(G));

        // concavity: quadratic form <= numerical zero
        Eigen::MatrixXcd eta = 0.3 * random_hermitian(rng, n);
        Eigen::MatrixXcd T = concavity_hessian(Z, table, table_pm1);
        record(1e-12 - quadratic_form(T, eta));

        // restricted concavity on random subsets
        std::vector<int> S1, S2;
        for (int r = 0; r < N; ++r) {
            if (rng.uniform() < 0.5) S1.push_back(r);
            if (rng.uniform() < 0.5) S2.push_back(r);
        }
        Eigen::MatrixXcd H = restricted_hessian(Z, table, table_pm1, S1, S2);
        record(1e-12 - quadratic_form(H, eta));

        // gradient check: central differences of log det Z along eta
        const double h = 1e-4;
        auto logdet_shift = [&](double eps) {
            Eigen::MatrixXcd dZ = wedge_11(Eigen::MatrixXcd(eps * eta), theta_flat, table,
                                           table_pm1);
            return std::log(std::abs(Eigen::MatrixXcd(Z.data + dZ).determinant()));
        };
        double fd = (logdet_shift(h) - logdet_shift(-h)) / (2.0 * h);
        Complex analytic = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) analytic += G(i, j) * eta(i, j);
        double rel = std::abs(fd - analytic.real()) / std::max(1.0, std::abs(fd));
        record(1e-6 - rel);
    }
    rep.duration_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    return rep;
}

} // namespace ppma
