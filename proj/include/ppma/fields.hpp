// ppma - grid-valued matrix fields: Hermitian n x n fields (metrics, complex
// Hessians, linearization coefficients) and N x N (p,p)-form coefficient
// fields, plus the spectral complex Hessian and metric construction.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ppma/forms.hpp"
#include "ppma/grid.hpp"

namespace ppma {

struct HermitianField {
    TorusGrid grid;
    int dim = 0;
    std::vector<Eigen::MatrixXcd> at;

    static HermitianField zero(const TorusGrid& g, int dim) {
        HermitianField f;
        f.grid = g;
        f.dim = dim;
        f.at.assign(g.points(), Eigen::MatrixXcd::Zero(dim, dim));
        return f;
    }

    static HermitianField identity(const TorusGrid& g, int dim) {
        HermitianField f;
        f.grid = g;
        f.dim = dim;
        f.at.assign(g.points(), Eigen::MatrixXcd::Identity(dim, dim));
        return f;
    }
};

// Coefficients G^{ij} of the linearized operator; same storage as any
// Hermitian field.
using LinearizationField = HermitianField;

struct PPField {
    TorusGrid grid;
    int n = 0, p = 0;
    std::vector<Eigen::MatrixXcd> at;

    static PPField constant(const TorusGrid& g, const PPMatrix& value) {
        PPField f;
        f.grid = g;
        f.n = value.n;
        f.p = value.p;
        f.at.assign(g.points(), value.data);
        return f;
    }
};

// Complex Hessian u_{i \bar j} by Fourier differentiation:
//   u_{i \bar j} = (1/4)(d_{x_i} d_{x_j} + d_{y_i} d_{y_j}) u
//               + (i/4)(d_{x_i} d_{y_j} - d_{y_i} d_{x_j}) u
// In reduced mode only the x axes exist and the result is real symmetric.
inline HermitianField spectral_hessian(const RealField& u, const TorusGrid& grid,
                                       const Spectral& sp) {
    if (!u.isFinite().all()) throw ParameterError("spectral_hessian: non-finite input");
    const int n = grid.n;
    const int A = grid.naxes();

    std::vector<RealField> d1(A);
    for (int a = 0; a < A; ++a) d1[a] = derivative(u, grid, sp, a);
    // second[a][b] = d_a d_b u (symmetric; D2 on the diagonal keeps Nyquist)
    std::vector<std::vector<RealField>> dd(A, std::vector<RealField>(A));
    for (int a = 0; a < A; ++a)
        for (int b = a; b < A; ++b) {
            dd[a][b] = (a == b) ? second_derivative(u, grid, sp, a)
                                : derivative(d1[a], grid, sp, b);
            if (a != b) dd[b][a] = dd[a][b];
        }

    HermitianField h = HermitianField::zero(grid, n);
    const long P = grid.points();
    for (long pt = 0; pt < P; ++pt) {
        Eigen::MatrixXcd& H = h.at[pt];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (grid.mode == GridMode::reduced) {
                    H(i, j) = 0.25 * dd[i][j](pt);
                } else {
                    double re = 0.25 * (dd[i][j](pt) + dd[n + i][n + j](pt));
                    double im = 0.25 * (dd[i][n + j](pt) - dd[n + i][j](pt));
                    H(i, j) = Complex(re, im);
                }
            }
    }
    return h;
}

// g = identity + complex Hessian of the potential; throws with the worst grid
// point if the result is not positive-definite.
inline HermitianField make_metric(const RealField& phi, const TorusGrid& grid,
                                  const Spectral& sp) {
    HermitianField g = spectral_hessian(phi, grid, sp);
    double worst = 0.0;
    long worst_idx = -1;
    for (long pt = 0; pt < grid.points(); ++pt) {
        g.at[pt] += Eigen::MatrixXcd::Identity(grid.n, grid.n);
        double mn = min_hermitian_eigenvalue(g.at[pt]);
        if (worst_idx < 0 || mn < worst) {
            worst = mn;
            worst_idx = pt;
        }
    }
    if (worst <= pd_floor(1.0 * grid.n, grid.n))
        throw PositivityError("make_metric: metric not positive-definite", worst, worst_idx);
    return g;
}

} // namespace ppma
