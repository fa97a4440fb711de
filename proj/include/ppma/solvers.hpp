// ppma - solution procedures for mu_{Omega_u} = e^{psi + b} omega^n: damped
// Newton with mean-zero gauge and b-update, the continuity path in t, and the
// parabolic flows (plain, normalized, time-dependent background).
#pragma once

#include <chrono>
#include <functional>
#include <vector>

#include "ppma/problem.hpp"

namespace ppma {

struct SolverDiagnostics {
    double res_sup = 0.0;
    double min_eig = 0.0;
    int steps = 0;
    std::vector<double> udot_history;
};

struct SolverState {
    RealField u;     // mean-zero potential
    double b = 0.0;  // constant of the equation (flows: constant part of u)
    double t = 0.0;  // path / flow time
    SolverDiagnostics diag;
};

struct StepReport {
    double step_size = 1.0;
    double v_sup = 0.0;
    double res_before = 0.0;
    double res_after = 0.0;
    int krylov_iters = 0;
    double min_eig = 0.0;
};

inline RealField project_mean_zero(const RealField& f) { return f - f.mean(); }

// Smallest relative eigenvalue of Z against omega^p over the grid.
inline double min_relative_eigenvalue(const PPField& Z, const ProblemSpec& spec) {
    double worst = 0.0;
    bool first = true;
    for (long pt = 0; pt < Z.grid.points(); ++pt) {
        Eigen::MatrixXcd W = compound(spec.g.at[pt], spec.table_p);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es(Z.at[pt], W,
                                                                      Eigen::EigenvaluesOnly);
        double mn = es.eigenvalues().minCoeff();
        if (first || mn < worst) worst = mn;
        first = false;
    }
    return worst;
}

// (n/(pN)) sum_ij G^{ij} v_{ij}, the linearization of the residual in u.
inline RealField apply_linearized(const RealField& v, const ProblemSpec& spec,
                                  const LinearizationField& G) {
    HermitianField hv = spectral_hessian(v, spec.grid, *spec.sp);
    const double factor = spec.density_exponent();
    RealField out(spec.grid.points());
    for (long pt = 0; pt < spec.grid.points(); ++pt)
        out(pt) = factor * (G.at[pt].array() * hv.at[pt].array()).sum().real();
    return out;
}

// Preconditioned BiCGStab on mean-zero fields; the preconditioner is the
// constant-coefficient flat Laplacian inverted spectrally.
inline RealField krylov_solve(const std::function<RealField(const RealField&)>& L,
                              const RealField& rhs, const ProblemSpec& spec, double c0,
                              double tol, int max_iter, int* iters_out = nullptr) {
    auto precond = [&](const RealField& f) {
        return project_mean_zero(solve_flat_laplacian(f, spec.grid, *spec.sp, c0));
    };
    const double rhs_norm = rhs.matrix().norm();
    RealField x = RealField::Zero(rhs.size());
    // A right-hand side at roundoff scale is indistinguishable from zero and
    // cannot be reduced further; return the zero update instead of stagnating.
    if (rhs_norm <= 1e-14 * std::sqrt(double(rhs.size()))) {
        if (iters_out) *iters_out = 0;
        return x;
    }
    RealField r = rhs, rhat = rhs;
    RealField p = RealField::Zero(rhs.size()), v = RealField::Zero(rhs.size());
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        double rho_new = (rhat * r).sum();
        if (rho_new == 0.0) break;
        if (it == 0) {
            p = r;
        } else {
            double beta = (rho_new / rho) * (alpha / omega);
            p = r + beta * (p - omega * v);
        }
        rho = rho_new;
        RealField phat = precond(p);
        v = project_mean_zero(L(phat));
        double denom = (rhat * v).sum();
        if (denom == 0.0) break;
        alpha = rho / denom;
        RealField s = r - alpha * v;
        if (s.matrix().norm() <= tol * rhs_norm) {
            x += alpha * phat;
            r = s;
            break;
        }
        RealField shat = precond(s);
        RealField t = project_mean_zero(L(shat));
        double tt = (t * t).sum();
        if (tt == 0.0) break;
        omega = (t * s).sum() / tt;
        x += alpha * phat + omega * shat;
        r = s - omega * t;
        if (r.matrix().norm() <= tol * rhs_norm) break;
        if (omega == 0.0) break;
    }
    if (iters_out) *iters_out = it + 1;
    if (r.matrix().norm() > 1e-3 * rhs_norm)
        throw LinearSolveError("krylov_solve: stagnation, residual not reduced");
    return project_mean_zero(x);
}

namespace detail {
inline double mean_diag_coefficient(const LinearizationField& G, const ProblemSpec& spec) {
    double s = 0.0;
    for (const auto& M : G.at) s += M.real().trace() / spec.grid.n;
    return spec.density_exponent() * s / double(G.at.size());
}
}  // namespace detail

// One damped Newton iteration. Solves the linearized equation on the
// mean-zero subspace, absorbs the residual mean into b, and backtracks until
// Z keeps a positivity margin and the sup-residual decreases.
inline StepReport newton_step(SolverState& state, const ProblemSpec& spec,
                              const RealField& psi, double krylov_tol = 1e-10,
                              int krylov_cap = 500, double positivity_margin = 0.1) {
    PPField Z = build_Z(state.u, spec);
    double min_eig = min_relative_eigenvalue(Z, spec);
    RealField r = residual(Z, spec.g, psi, state.b);
    double rbar = r.mean();
    state.b += rbar;
    RealField rr = r - rbar;

    StepReport rep;
    rep.res_before = rr.abs().maxCoeff();
    rep.min_eig = min_eig;

    LinearizationField G = linearization(Z, spec.table_p, spec.table_pm1);
    double c0 = detail::mean_diag_coefficient(G, spec);
    auto L = [&](const RealField& w) { return apply_linearized(w, spec, G); };
    RealField v =
        krylov_solve(L, RealField(-rr), spec, c0, krylov_tol, krylov_cap, &rep.krylov_iters);
    rep.v_sup = v.abs().maxCoeff();

    double s = 1.0;
    for (int half = 0; half < 30; ++half, s *= 0.5) {
        RealField u_try = project_mean_zero(state.u + s * v);
        PPField Z_try;
        try {
            Z_try = build_Z(u_try, spec);
        } catch (const PositivityError&) {
            continue;
        }
        double me = min_relative_eigenvalue(Z_try, spec);
        if (me < positivity_margin * min_eig) continue;
        RealField r_try;
        try {
            r_try = residual(Z_try, spec.g, psi, state.b);
        } catch (const PositivityError&) {
            continue;
        }
        double res_try = (r_try - r_try.mean()).abs().maxCoeff();
        bool improved = res_try < rep.res_before * (1.0 - 1e-4) || res_try < 1e-13;
        if (!improved) continue;
        state.u = u_try;
        rep.step_size = s;
        rep.res_after = res_try;
        state.diag.res_sup = res_try;
        state.diag.min_eig = me;
        ++state.diag.steps;
        return rep;
    }
    throw ConvergenceError("newton_step: line search failed (step floor hit)",
                           rep.res_before, state.diag.steps);
}

inline SolverState newton_solve(const ProblemSpec& spec, const RealField& psi, double tol,
                                int max_iter, const RealField* u0 = nullptr) {
    SolverState state;
    state.u = u0 ? project_mean_zero(*u0) : RealField::Zero(spec.grid.points());
    for (int it = 0; it < max_iter; ++it) {
        PPField Z = build_Z(state.u, spec);
        RealField r = residual(Z, spec.g, psi, state.b);
        double rbar = r.mean();
        double res = (r - rbar).abs().maxCoeff();
        state.diag.res_sup = res;
        if (res <= tol) {
            state.b += rbar;
            state.diag.min_eig = min_relative_eigenvalue(Z, spec);
            return state;
        }
        newton_step(state, spec, psi);
    }
    throw ConvergenceError("newton_solve: tolerance not reached", state.diag.res_sup,
                           max_iter);
}

// Continuity path mu_{Omega_{u_t}} = e^{t psi + b_t} mu_Omega solved by
// warm-started Newton at t = k/steps; the reference density is that of the
// background form, folded into the effective data.
inline std::vector<SolverState> continuity_solve(const ProblemSpec& spec,
                                                 const RealField& psi, int steps,
                                                 double tol, int max_iter = 50) {
    if (steps < 1) throw ParameterError("continuity_solve: steps >= 1");
    const long P = spec.grid.points();
    RealField base(P);  // log(mu_Omega / omega^n) pointwise
    const double expo = spec.density_exponent();
    for (long pt = 0; pt < P; ++pt) {
        double ldX = Eigen::PartialPivLU<Eigen::MatrixXcd>(spec.X.at[pt])
                         .matrixLU().diagonal().array().abs().log().sum();
        double ldg = Eigen::PartialPivLU<Eigen::MatrixXcd>(spec.g.at[pt])
                         .matrixLU().diagonal().array().abs().log().sum();
        base(pt) = expo * ldX - ldg;
    }

    std::vector<SolverState> path;
    SolverState cur;
    cur.u = RealField::Zero(P);
    cur.t = 0.0;
    path.push_back(cur);

    std::function<SolverState(const SolverState&, double, double, int)> advance =
        [&](const SolverState& from, double t_from, double t_to, int depth) -> SolverState {
        RealField psi_eff = t_to * psi + base;
        try {
            SolverState next = newton_solve(spec, psi_eff, tol, max_iter, &from.u);
            next.t = t_to;
            return next;
        } catch (const ConvergenceError& e) {
            if (depth >= 4)
                throw ConvergenceError(
                    std::string("continuity_solve: failed at t = ") + std::to_string(t_to) +
                        " (" + e.what() + ")",
                    e.residual_sup, e.iterations);
            double t_mid = 0.5 * (t_from + t_to);
            SolverState mid = advance(from, t_from, t_mid, depth + 1);
            return advance(mid, t_mid, t_to, depth + 1);
        }
    };

    for (int k = 1; k <= steps; ++k) {
        double t_to = double(k) / steps;
        cur = advance(cur, cur.t, t_to, 0);
        path.push_back(cur);
    }
    return path;
}

enum class FlowVariant { plain, normalized, background };

struct FlowConfig {
    FlowVariant variant = FlowVariant::plain;
    double dt_init = 0.0;  // 0 -> derived from the linearization each stretch
    double dt_floor = 1e-8;
    double positivity_margin = 0.1;
    double max_time = 20.0;
    double tol = 1e-6;
    RealField theta_log;   // log reference density; empty -> log(spec.mu_ref)
    std::function<PPField(double)> background;  // optional Omega-hat_t path
    int max_steps = 200000;
};

struct FlowSample {
    int iter = 0;
    double t = 0.0;
    double res_sup = 0.0;
    double b = 0.0;
    double min_eig = 0.0;
    double udot_sup = 0.0;
    double dt = 0.0;
    double wallclock_ms = 0.0;
};

struct FlowResult {
    SolverState state;
    std::vector<FlowSample> series;
};

// Explicit Euler time stepping with adaptive dt halving on positivity
// violation. The mean-zero part of u is stored in state.u; the constant part
// (normalized variant) or the stationary residual constant (plain) is in b.
inline FlowResult flow_run(const ProblemSpec& spec, const RealField& psi,
                           const FlowConfig& config) {
    if (config.dt_floor <= 0.0 || config.positivity_margin <= 0.0 ||
        config.positivity_margin >= 1.0)
        throw ParameterError("flow_run: invalid dt floor or positivity margin");
    const long P = spec.grid.points();
    const double factor = spec.density_exponent();
    RealField theta_log =
        config.theta_log.size() > 0 ? config.theta_log : RealField(spec.mu_ref.log());

    auto wall_start = std::chrono::steady_clock::now();
    FlowResult out;
    out.state.u = RealField::Zero(P);
    double c = 0.0;  // constant component of u (normalized variant)
    double t = 0.0;

    // log mu_{Omega_u} - log theta - (psi for the plain variant)
    auto forcing = [&](const RealField& u, double time) -> RealField {
        PPField Z;
        if (config.background) {
            HermitianField h = spectral_hessian(u, spec.grid, *spec.sp);
            Z = build_Z(h, config.background(time), spec.g, spec.table_p, spec.table_pm1);
        } else {
            Z = build_Z(u, spec);
        }
        RealField F(P);
        for (long pt = 0; pt < P; ++pt) {
            double mn = min_hermitian_eigenvalue(Z.at[pt]);
            if (mn <= pd_floor(Z.at[pt].real().trace(), spec.N()))
                throw PositivityError("flow_run: Z left the positive cone", mn, pt);
            double ld = Eigen::PartialPivLU<Eigen::MatrixXcd>(Z.at[pt])
                            .matrixLU().diagonal().array().abs().log().sum();
            F(pt) = factor * ld - theta_log(pt);
        }
        if (config.variant == FlowVariant::plain) F -= psi;
        return F;
    };

    auto stability_dt = [&](const RealField& u) -> double {
        PPField Z = build_Z(u, spec);
        LinearizationField G = linearization(Z, spec.table_p, spec.table_pm1);
        double gmax = 0.0;
        for (const auto& M : G.at) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M, Eigen::EigenvaluesOnly);
            gmax = std::max(gmax, es.eigenvalues().maxCoeff());
        }
        double k2 = spec.grid.naxes() * 0.25 * double(spec.grid.m) * double(spec.grid.m);
        double lam = factor * 0.25 * gmax * k2 + 1.0;
        return 1.8 / lam;
    };

    double dt = config.dt_init > 0.0 ? config.dt_init : stability_dt(out.state.u);
    const double dt_cap = dt;
    RealField F = forcing(out.state.u, t);

    for (int iter = 0; iter < config.max_steps; ++iter) {
        RealField udot = F;
        if (config.variant == FlowVariant::normalized) udot = F - out.state.u - c;
        double udot_mean = udot.mean();
        double udot_sup = config.variant == FlowVariant::plain
                              ? (udot - udot_mean).abs().maxCoeff()
                              : udot.abs().maxCoeff();

        FlowSample smp;
        smp.iter = iter;
        smp.t = t;
        smp.b = config.variant == FlowVariant::normalized ? c : udot_mean;
        smp.udot_sup = udot_sup;
        smp.dt = dt;
        smp.res_sup = (F - F.mean()).abs().maxCoeff();
        smp.wallclock_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - wall_start)
                               .count();
        out.series.push_back(smp);
        out.state.diag.udot_history.push_back(udot_sup);

        if (udot_sup < config.tol || t >= config.max_time) break;

        // attempt a step, halving dt on positivity loss
        while (true) {
            RealField u_try = project_mean_zero(out.state.u + dt * (udot - udot_mean));
            double c_try = c + dt * udot_mean;
            try {
                RealField F_try = forcing(u_try, t + dt);
                out.state.u = u_try;
                c = c_try;
                t += dt;
                F = F_try;
                dt = std::min(dt * 1.1, dt_cap);
                break;
            } catch (const PositivityError& e) {
                dt *= 0.5;
                if (dt < config.dt_floor)
                    throw StiffnessError(
                        std::string("flow_run: dt floor reached (") + e.what() + ")",
                        e.grid_index);
            }
        }
    }

    out.state.t = t;
    out.state.b = config.variant == FlowVariant::normalized ? c : F.mean();
    out.state.diag.steps = static_cast<int>(out.series.size());
    out.state.diag.res_sup = out.series.empty() ? 0.0 : out.series.back().udot_sup;
    PPField Zf = build_Z(out.state.u, spec);
    out.state.diag.min_eig = min_relative_eigenvalue(Zf, spec);
    return out;
}

// Assembles the evolving form from the scalar solution and the (possibly
// time-dependent) background, asserting positivity.
inline PPField form_flow_reconstruct(const SolverState& state, const ProblemSpec& spec,
                                     double t,
                                     const std::function<PPField(double)>& background = {}) {
    HermitianField h = spectral_hessian(state.u, spec.grid, *spec.sp);
    PPField Xt = background ? background(t) : spec.X;
    PPField Z = build_Z(h, Xt, spec.g, spec.table_p, spec.table_pm1);
    for (long pt = 0; pt < Z.grid.points(); ++pt) {
        double mn = min_hermitian_eigenvalue(Z.at[pt]);
        if (mn <= pd_floor(Z.at[pt].real().trace(), spec.N()))
            throw PositivityError("form_flow_reconstruct: form not positive", mn, pt);
    }
    return Z;
}

// Least-squares slope of log(series value) against t over [t_lo, t_hi].
inline double fitted_log_slope(const std::vector<FlowSample>& series, double t_lo,
                               double t_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (const auto& s : series) {
        if (s.t < t_lo || s.t > t_hi || s.udot_sup <= 0.0) continue;
        double x = s.t, y = std::log(s.udot_sup);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++cnt;
    }
    if (cnt < 2) throw ParameterError("fitted_log_slope: not enough samples in window");
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

} // namespace ppma
