// ppma - periodic discretization of the torus C^n / (2 pi Z)^{2n}: flattened
// grid indexing, Fourier differentiation matrices, quadrature, and the flat
// Laplacian solve used as a solver preconditioner.
//
// Modes: "full" grids carry all 2n real axes (x_1..x_n, y_1..y_n); "reduced"
// grids carry only the x axes, for fields independent of the imaginary parts.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "ppma/errors.hpp"

namespace ppma {

using RealField = Eigen::ArrayXd;
using ComplexField = Eigen::ArrayXcd;

enum class GridMode { full, reduced };

inline std::string to_string(GridMode mode) {
    return mode == GridMode::full ? "full" : "reduced";
}

struct TorusGrid {
    int n = 0;       // complex dimension
    int m = 0;       // points per real axis
    GridMode mode = GridMode::full;

    TorusGrid() = default;
    TorusGrid(int n_, int m_, GridMode mode_) : n(n_), m(m_), mode(mode_) {
        if (n < 1 || n > 8) throw ParameterError("TorusGrid: need 1 <= n <= 8");
        if (m < 8 || m % 2 != 0) throw ParameterError("TorusGrid: need even m >= 8");
    }

    int naxes() const { return mode == GridMode::full ? 2 * n : n; }

    long points() const {
        long p = 1;
        for (int a = 0; a < naxes(); ++a) p *= m;
        return p;
    }

    // axis 0 is slowest (row-major in axis order x_1..x_n, y_1..y_n)
    long stride(int axis) const {
        long s = 1;
        for (int a = axis + 1; a < naxes(); ++a) s *= m;
        return s;
    }

    double coord(long flat, int axis) const {
        long c = (flat / stride(axis)) % m;
        return 2.0 * M_PI * double(c) / double(m);
    }
};

// Dense Fourier differentiation matrices for one axis length. First
// derivative zeroes the Nyquist mode; second derivative keeps it.
class Spectral {
public:
    explicit Spectral(int m) : m_(m) {
        using namespace std::complex_literals;
        Eigen::MatrixXcd F(m, m), Finv(m, m);
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                double ang = 2.0 * M_PI * double(j) * double(k) / double(m);
                F(k, j) = std::exp(-1.0i * ang);
                Finv(j, k) = std::exp(1.0i * ang) / double(m);
            }
        Eigen::VectorXd k1(m), k2(m);
        for (int k = 0; k < m; ++k) {
            int kk = (k <= m / 2) ? k : k - m;
            k1(k) = (k == m / 2) ? 0.0 : double(kk);
            k2(k) = double(kk) * double(kk);
        }
        d1_ = (Finv * (1.0i * k1.cast<std::complex<double>>()).asDiagonal() * F).real();
        d2_ = (Finv * (-k2).cast<std::complex<double>>().asDiagonal() * F).real();
        fwd_ = F;
        inv_ = Finv;
        ksq_ = k2;
    }

    int m() const { return m_; }
    const Eigen::MatrixXd& d1() const { return d1_; }
    const Eigen::MatrixXd& d2() const { return d2_; }
    const Eigen::MatrixXcd& forward() const { return fwd_; }
    const Eigen::MatrixXcd& inverse() const { return inv_; }
    double ksq(int k) const { return ksq_(k); }

private:
    int m_;
    Eigen::MatrixXd d1_, d2_;
    Eigen::MatrixXcd fwd_, inv_;
    Eigen::VectorXd ksq_;
};

// Applies an m x m matrix along one axis of a flattened field.
template <typename Scalar, typename MatrixT>
Eigen::Array<Scalar, Eigen::Dynamic, 1> apply_axis(
    const Eigen::Array<Scalar, Eigen::Dynamic, 1>& f, const TorusGrid& grid, int axis,
    const MatrixT& M) {
    const long s = grid.stride(axis);
    const int m = grid.m;
    const long block = s * m;
    const long nblocks = grid.points() / block;
    Eigen::Array<Scalar, Eigen::Dynamic, 1> out(f.size());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> line(m), res(m);
    for (long b = 0; b < nblocks; ++b) {
        const long base = b * block;
        for (long inner = 0; inner < s; ++inner) {
            for (int i = 0; i < m; ++i) line(i) = f(base + inner + i * s);
            res.noalias() = M.template cast<Scalar>() * line;
            for (int i = 0; i < m; ++i) out(base + inner + i * s) = res(i);
        }
    }
    return out;
}

inline RealField derivative(const RealField& f, const TorusGrid& grid, const Spectral& sp,
                            int axis) {
    return apply_axis(f, grid, axis, sp.d1());
}

inline RealField second_derivative(const RealField& f, const TorusGrid& grid,
                                   const Spectral& sp, int axis) {
    return apply_axis(f, grid, axis, sp.d2());
}

// Weighted periodic quadrature: the plain grid average is spectrally accurate
// for smooth periodic integrands.
inline double grid_mean(const RealField& f, const RealField& weight) {
    double wsum = weight.sum();
    if (weight.minCoeff() <= 0.0) throw ParameterError("grid_mean: weight must be positive");
    return (f * weight).sum() / wsum;
}

inline double grid_mean(const RealField& f) { return f.mean(); }

// Solves c0 * (1/4) * Laplacian(v) = f on the mean-zero subspace via the full
// Fourier transform; the zero mode of f is discarded.
inline RealField solve_flat_laplacian(const RealField& f, const TorusGrid& grid,
                                      const Spectral& sp, double c0) {
    ComplexField fhat = f.cast<std::complex<double>>();
    const int A = grid.naxes();
    for (int a = 0; a < A; ++a) fhat = apply_axis(fhat, grid, a, sp.forward());
    // accumulate |k|^2 per flat index
    const long P = grid.points();
    for (long idx = 0; idx < P; ++idx) {
        double k2 = 0.0;
        for (int a = 0; a < A; ++a) k2 += sp.ksq(int((idx / grid.stride(a)) % grid.m));
        fhat(idx) = (k2 == 0.0) ? 0.0 : fhat(idx) / (-0.25 * c0 * k2);
    }
    for (int a = 0; a < A; ++a) fhat = apply_axis(fhat, grid, a, sp.inverse());
    return fhat.real();
}

} // namespace ppma
