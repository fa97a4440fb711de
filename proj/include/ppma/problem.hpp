// ppma - a fully assembled torus problem: geometry, metric, background form,
// data and reference density, plus manufactured-solution construction.
#pragma once

#include <memory>

#include "ppma/fields.hpp"
#include "ppma/operator.hpp"

namespace ppma {

struct ProblemSpec {
    TorusGrid grid;
    int p = 1;
    std::shared_ptr<const Spectral> sp;
    IndexTable table_p, table_pm1;
    HermitianField g;    // Kahler metric omega
    PPField X;           // background (p,p)-form coefficients
    RealField psi;       // data
    RealField mu_ref;    // reference density mu_{Omega~}, > 0

    int N() const { return table_p.size(); }
    double density_exponent() const { return double(grid.n) / (double(p) * N()); }

    // Flat metric, X = matrix of omega^p (identity), psi = 0, mu_ref = 1.
    static ProblemSpec flat(int n, int p, int m, GridMode mode) {
        ProblemSpec s;
        s.grid = TorusGrid(n, m, mode);
        if (p < 1 || p > n - 1)
            throw ParameterError("ProblemSpec: need 1 <= p <= n-1");
        s.p = p;
        s.sp = std::make_shared<Spectral>(m);
        s.table_p = build_index_table(n, p);
        s.table_pm1 = IndexTable::build(n, p - 1);
        s.g = HermitianField::identity(s.grid, n);
        PPMatrix id = PPMatrix::zero(s.table_p);
        id.data.setIdentity();
        s.X = PPField::constant(s.grid, id);
        s.psi = RealField::Zero(s.grid.points());
        s.mu_ref = RealField::Ones(s.grid.points());
        return s;
    }

    // Metric from a periodic potential; X = matrix of omega^p pointwise.
    static ProblemSpec from_potential(int n, int p, int m, GridMode mode,
                                      const RealField& phi) {
        ProblemSpec s = flat(n, p, m, mode);
        s.g = make_metric(phi, s.grid, *s.sp);
        for (long pt = 0; pt < s.grid.points(); ++pt)
            s.X.at[pt] = compound(s.g.at[pt], s.table_p);
        return s;
    }

    void validate() const {
        for (long pt = 0; pt < grid.points(); ++pt) {
            double gm = min_hermitian_eigenvalue(g.at[pt]);
            if (gm <= pd_floor(g.at[pt].real().trace(), grid.n))
                throw PositivityError("ProblemSpec: metric not positive-definite", gm, pt);
            double xm = min_hermitian_eigenvalue(X.at[pt]);
            if (xm <= pd_floor(X.at[pt].real().trace(), N()))
                throw PositivityError("ProblemSpec: background not positive-definite", xm, pt);
        }
        if (mu_ref.minCoeff() <= 0.0)
            throw PositivityError("ProblemSpec: reference density must be positive");
    }
};

inline PPField build_Z(const RealField& u, const ProblemSpec& spec) {
    HermitianField h = spectral_hessian(u, spec.grid, *spec.sp);
    return build_Z(h, spec.X, spec.g, spec.table_p, spec.table_pm1);
}

// psi such that (u_star - mean, b = 0) solves the discrete equation exactly.
inline RealField manufactured_problem(const RealField& u_star, const ProblemSpec& spec) {
    PPField Z = build_Z(u_star, spec);
    RealField zero = RealField::Zero(spec.grid.points());
    return residual(Z, spec.g, zero, 0.0);
}

} // namespace ppma
