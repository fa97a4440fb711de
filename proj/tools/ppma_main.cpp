// ppma command line front end: solve / continuity / flow / verify / study.
// Flat key-value config files with dotted keys; flags override the file.
// Every run directory gets an effective-config echo, a summary JSON and at
// least one CSV.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ppma/io.hpp"
#include "ppma/problem.hpp"
#include "ppma/solvers.hpp"
#include "ppma/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppma;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat dotted-key configuration with string values and typed accessors.
class RunConfig {
public:
    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config file not found: " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto trim = [](std::string s) {
                auto b = s.find_first_not_of(" \t\r");
                auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string()
                                              : s.substr(b, e - b + 1);
            };
            if (trim(line).empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (!known(key))
                throw ConfigError("unknown config key: " + key);
            values_[key] = val;
        }
    }

    void set(const std::string& key, const std::string& val) {
        if (!known(key)) throw ConfigError("unknown config key: " + key);
        values_[key] = val;
    }

    std::string get(const std::string& key) const {
        auto it = values_.find(key);
        if (it != values_.end()) return it->second;
        auto dv = defaults().find(key);
        return dv->second;
    }

    double get_real(const std::string& key) const {
        const std::string v = get(key);
        try {
            std::size_t used = 0;
            double x = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError("invalid numeric value for " + key + ": " + v);
        }
    }

    int get_int(const std::string& key) const {
        double x = get_real(key);
        int i = static_cast<int>(x);
        if (double(i) != x) throw ConfigError("expected integer for " + key);
        return i;
    }

    void echo(const std::string& path) const {
        std::ofstream out(path);
        for (const auto& [k, dv] : defaults()) {
            auto it = values_.find(k);
            out << k << " = " << (it != values_.end() ? it->second : dv) << "\n";
        }
    }

private:
    static const std::map<std::string, std::string>& defaults() {
        static const std::map<std::string, std::string> d = {
            {"geometry.n", "2"},
            {"geometry.p", "1"},
            {"geometry.m", "8"},
            {"geometry.mode", "reduced"},
            {"metric.amplitude", "0"},
            {"data.amplitude", "0.05"},
            {"solver.tol", "1e-10"},
            {"solver.max_iter", "30"},
            {"continuity.steps", "10"},
            {"flow.variant", "plain"},
            {"flow.max_time", "200"},
            {"flow.tol", "1e-7"},
            {"flow.dt", "0"},
            {"flow.dt_floor", "1e-8"},
            {"verify.trials", "200"},
            {"study.levels", "3"},
            {"run.seed", "1"},
            {"run.out", "ppma-out"},
        };
        return d;
    }
    static bool known(const std::string& key) {
        return defaults().count(key) > 0;
    }

    std::map<std::string, std::string> values_;
};

struct Geometry {
    int n = 0, p = 0, m = 0;
    GridMode mode = GridMode::reduced;
};

Geometry resolve_geometry(const RunConfig& cfg) {
    Geometry g;
    g.n = cfg.get_int("geometry.n");
    g.p = cfg.get_int("geometry.p");
    g.m = cfg.get_int("geometry.m");
    std::string mode = cfg.get("geometry.mode");
    if (mode == "full")
        g.mode = GridMode::full;
    else if (mode == "reduced")
        g.mode = GridMode::reduced;
    else
        throw ConfigError("geometry.mode must be full or reduced");
    if (g.n < 2 || g.n > 8)
        throw ConfigError("geometry.n must satisfy 2 <= n <= 8");
    if (g.p < 1 || g.p > g.n - 1)
        throw ConfigError("geometry.p out of range: need 1 <= p <= n-1");
    if (g.m < 8 || g.m % 2 != 0)
        throw ConfigError("geometry.m must be even and >= 8");
    long pts = 1;
    for (int a = 0; a < (g.mode == GridMode::full ? 2 * g.n : g.n); ++a) {
        pts *= g.m;
        if (pts > (1L << 22))
            throw ConfigError("grid too large: point count exceeds 2^22");
    }
    return g;
}

ProblemSpec make_spec(const RunConfig& cfg, const Geometry& g) {
    double metric_amp = cfg.get_real("metric.amplitude");
    if (metric_amp == 0.0) return ProblemSpec::flat(g.n, g.p, g.m, g.mode);
    TorusGrid grid(g.n, g.m, g.mode);
    RealField phi(grid.points());
    for (long i = 0; i < grid.points(); ++i)
        phi(i) = metric_amp * std::cos(grid.coord(i, 0));
    return ProblemSpec::from_potential(g.n, g.p, g.m, g.mode, phi);
}

RealField manufactured_target(const ProblemSpec& spec, double amp) {
    RealField u(spec.grid.points());
    for (long i = 0; i < spec.grid.points(); ++i)
        u(i) = amp * std::cos(spec.grid.coord(i, 0) + spec.grid.coord(i, 1));
    return project_mean_zero(u);
}

json geometry_json(const Geometry& g) {
    return json{{"n", g.n}, {"p", g.p}, {"m", g.m},
                {"mode", g.mode == GridMode::full ? "full" : "reduced"}};
}

void write_summary(const fs::path& out, const json& body) {
    json j = body;
    j["schema"] = "ppma-summary v1";
    std::ofstream f(out / "summary.json");
    f << j.dump(2) << "\n";
}

int cmd_solve(const RunConfig& cfg, const fs::path& out) {
    Geometry g = resolve_geometry(cfg);
    ProblemSpec spec = make_spec(cfg, g);
    spec.validate();
    RealField u_star = manufactured_target(spec, cfg.get_real("data.amplitude"));
    RealField psi = manufactured_problem(u_star, spec);
    double tol = cfg.get_real("solver.tol");
    int max_iter = cfg.get_int("solver.max_iter");

    auto wall0 = std::chrono::steady_clock::now();
    CsvWriter csv((out / "newton.csv").string(),
                  "iter,t,res_sup,b,min_eig,udot_sup,dt,wallclock_ms");
    SolverState state;
    state.u = RealField::Zero(spec.grid.points());
    double res = 0.0;
    int iter = 0;
    for (;; ++iter) {
        PPField Z = build_Z(state.u, spec);
        RealField r = residual(Z, spec.g, psi, state.b);
        res = (r - r.mean()).abs().maxCoeff();
        double mineig = min_relative_eigenvalue(Z, spec);
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - wall0)
                        .count();
        csv.row(iter, 0.0, res, state.b + r.mean(), mineig, 0.0, 1.0, ms);
        if (res <= tol) {
            state.b += r.mean();
            state.diag.min_eig = mineig;
            break;
        }
        if (iter >= max_iter)
            throw ConvergenceError("solve: tolerance not reached", res, iter);
        newton_step(state, spec, psi);
    }

    write_field((out / "u.field").string(), state.u, spec.grid, spec.p);
    double err = (state.u - u_star).abs().maxCoeff();
    write_summary(out, json{{"command", "solve"},
                            {"geometry", geometry_json(g)},
                            {"seed", cfg.get_int("run.seed")},
                            {"iterations", iter},
                            {"res_sup", res},
                            {"b", state.b},
                            {"min_eig", state.diag.min_eig},
                            {"recovery_error", err},
                            {"sup_gauge_shift", state.u.maxCoeff()}});
    return 0;
}

int cmd_continuity(const RunConfig& cfg, const fs::path& out) {
    Geometry g = resolve_geometry(cfg);
    ProblemSpec spec = make_spec(cfg, g);
    spec.validate();
    RealField u_star = manufactured_target(spec, cfg.get_real("data.amplitude"));
    RealField psi = manufactured_problem(u_star, spec);

    auto wall0 = std::chrono::steady_clock::now();
    auto path = continuity_solve(spec, psi, cfg.get_int("continuity.steps"),
                                 cfg.get_real("solver.tol"),
                                 cfg.get_int("solver.max_iter"));
    CsvWriter csv((out / "path.csv").string(),
                  "iter,t,res_sup,b,min_eig,udot_sup,dt,wallclock_ms");
    for (std::size_t k = 0; k < path.size(); ++k) {
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - wall0)
                        .count();
        csv.row(k, path[k].t, path[k].diag.res_sup, path[k].b,
                path[k].diag.min_eig, 0.0, 0.0, ms);
    }
    write_field((out / "u.field").string(), path.back().u, spec.grid, spec.p);
    write_summary(out, json{{"command", "continuity"},
                            {"geometry", geometry_json(g)},
                            {"seed", cfg.get_int("run.seed")},
                            {"steps", static_cast<int>(path.size()) - 1},
                            {"b", path.back().b},
                            {"res_sup", path.back().diag.res_sup},
                            {"recovery_error",
                             (path.back().u - u_star).abs().maxCoeff()}});
    return 0;
}

int cmd_flow(const RunConfig& cfg, const fs::path& out) {
    Geometry g = resolve_geometry(cfg);
    ProblemSpec spec = make_spec(cfg, g);
    spec.validate();
    RealField u_star = manufactured_target(spec, cfg.get_real("data.amplitude"));
    RealField psi = manufactured_problem(u_star, spec);

    FlowConfig fc;
    std::string variant = cfg.get("flow.variant");
    if (variant == "plain")
        fc.variant = FlowVariant::plain;
    else if (variant == "normalized")
        fc.variant = FlowVariant::normalized;
    else if (variant == "background")
        fc.variant = FlowVariant::background;
    else
        throw ConfigError("flow.variant must be plain, normalized or background");
    fc.max_time = cfg.get_real("flow.max_time");
    fc.tol = cfg.get_real("flow.tol");
    fc.dt_init = cfg.get_real("flow.dt");
    fc.dt_floor = cfg.get_real("flow.dt_floor");
    if (fc.variant == FlowVariant::normalized) {
        // fold the data into the reference density so the manufactured
        // potential is the stationary point of the normalized equation
        PPField Zs = build_Z(u_star, spec);
        RealField zero = RealField::Zero(spec.grid.points());
        fc.theta_log = RealField(residual(Zs, spec.g, zero, 0.0) - u_star);
    } else if (fc.variant == FlowVariant::background) {
        PPField X = spec.X;
        fc.background = [X](double) { return X; };
    }

    FlowResult res = flow_run(spec, psi, fc);
    CsvWriter csv((out / "flow.csv").string(),
                  "iter,t,res_sup,b,min_eig,udot_sup,dt,wallclock_ms");
    for (const auto& s : res.series)
        csv.row(s.iter, s.t, s.res_sup, s.b, s.min_eig, s.udot_sup, s.dt,
                s.wallclock_ms);
    write_field((out / "u.field").string(), res.state.u, spec.grid, spec.p);
    json summary{{"command", "flow"},
                 {"geometry", geometry_json(g)},
                 {"seed", cfg.get_int("run.seed")},
                 {"variant", variant},
                 {"t_final", res.state.t},
                 {"b", res.state.b},
                 {"udot_sup", res.state.diag.res_sup},
                 {"min_eig", res.state.diag.min_eig}};
    if (fc.variant == FlowVariant::normalized && res.state.t > 5.0)
        summary["udot_log_slope"] = fitted_log_slope(res.series, 1.0, 5.0);
    write_summary(out, summary);
    return 0;
}

int cmd_verify(const RunConfig& cfg, const fs::path& out) {
    Geometry g = resolve_geometry(cfg);
    std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("run.seed"));
    int trials = cfg.get_int("verify.trials");

    std::vector<SuiteReport> reports;
    reports.push_back(run_inversion_lemma_suite(std::max(trials, 1000), seed, 5));
    reports.push_back(run_algebra_suite(std::max(trials / 2, 100), seed + 1, g.n, g.p));
    reports.push_back(run_operator_suite(trials, seed + 2, g.n, g.p));

    bool all_pass = true;
    json list = json::array();
    for (const auto& rep : reports) {
        json j{{"suite", rep.suite},       {"trials", rep.trials},
               {"failures", rep.failures}, {"worst_margin", rep.worst_margin},
               {"seed", rep.seed},         {"duration_ms", rep.duration_ms}};
        std::ofstream f(out / ("verify_" + rep.suite + ".json"));
        f << j.dump(2) << "\n";
        list.push_back(j);
        all_pass = all_pass && rep.passed();
    }
    CsvWriter csv((out / "verify.csv").string(),
                  "suite,trials,failures,worst_margin,duration_ms");
    for (const auto& rep : reports)
        csv.row(rep.suite, rep.trials, rep.failures, rep.worst_margin,
                rep.duration_ms);
    write_summary(out, json{{"command", "verify"},
                            {"geometry", geometry_json(g)},
                            {"seed", cfg.get_int("run.seed")},
                            {"suites", list},
                            {"pass", all_pass}});
    return all_pass ? 0 : 5;
}

int cmd_study(const RunConfig& cfg, const fs::path& out) {
    Geometry g = resolve_geometry(cfg);
    if (g.mode != GridMode::reduced)
        throw ConfigError("study: only reduced mode is supported");
    const double amp = cfg.get_real("data.amplitude");
    int levels = cfg.get_int("study.levels");
    if (levels < 2 || levels > 4) throw ConfigError("study.levels must be 2..4");

    // continuum manufactured solution u*(x) = amp * exp(cos x1) with data
    // evaluated analytically, so the error per m is pure discretization
    CsvWriter csv((out / "study.csv").string(), "m,error");
    json rows = json::array();
    std::vector<double> errors;
    int m = 8;
    for (int lvl = 0; lvl < levels; ++lvl, m *= 2) {
        ProblemSpec spec = ProblemSpec::flat(g.n, g.p, m, GridMode::reduced);
        const long P = spec.grid.points();
        RealField u_star(P), psi(P);
        for (long i = 0; i < P; ++i) {
            double x = spec.grid.coord(i, 0);
            double upp = amp * std::exp(std::cos(x)) *
                         (std::sin(x) * std::sin(x) - std::cos(x));
            u_star(i) = amp * std::exp(std::cos(x));
            // x1-only potentials make Z diagonal; the density exponent and
            // the multiplicity of indices containing 1 cancel to exactly 1
            psi(i) = std::log1p(0.25 * upp);
        }
        u_star = project_mean_zero(u_star);
        SolverState s = newton_solve(spec, psi, 1e-11, 40);
        double err = (s.u - u_star).abs().maxCoeff();
        errors.push_back(err);
        csv.row(m, err);
        rows.push_back(json{{"m", m}, {"error", err}});
    }
    bool geometric = true;
    for (std::size_t k = 0; k + 1 < errors.size(); ++k)
        geometric = geometric && errors[k + 1] <= errors[k] / 10.0;
    write_summary(out, json{{"command", "study"},
                            {"geometry", geometry_json(g)},
                            {"seed", cfg.get_int("run.seed")},
                            {"table", rows},
                            {"geometric_decay", geometric}});
    return geometric ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("PPMA_THREADS"))
        Eigen::setNbThreads(std::max(1, std::atoi(threads)));

    CLI::App app{"positive (p,p)-form Monge-Ampere toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, mode_flag, variant_flag;
    int n_flag = -1, p_flag = -1, m_flag = -1;
    long seed_flag = -1;
    double tol_flag = -1.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value config file");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed_flag, "rng seed");
        sub->add_option("--n", n_flag, "complex dimension");
        sub->add_option("--p", p_flag, "form degree");
        sub->add_option("--m", m_flag, "grid points per axis");
        sub->add_option("--mode", mode_flag, "full|reduced");
        sub->add_option("--tol", tol_flag, "solver tolerance");
        sub->add_option("--variant", variant_flag, "plain|normalized|background");
    };
    CLI::App* solve = app.add_subcommand("solve", "Newton solve, manufactured data");
    CLI::App* continuity = app.add_subcommand("continuity", "continuity path");
    CLI::App* flow = app.add_subcommand("flow", "parabolic flow");
    CLI::App* verify = app.add_subcommand("verify", "property suites");
    CLI::App* study = app.add_subcommand("study", "grid convergence study");
    for (CLI::App* sub : {solve, continuity, flow, verify, study}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    fs::path out;
    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg.load_file(config_path);
        if (n_flag >= 0) cfg.set("geometry.n", std::to_string(n_flag));
        if (p_flag >= 0) cfg.set("geometry.p", std::to_string(p_flag));
        if (m_flag >= 0) cfg.set("geometry.m", std::to_string(m_flag));
        if (!mode_flag.empty()) cfg.set("geometry.mode", mode_flag);
        if (seed_flag >= 0) cfg.set("run.seed", std::to_string(seed_flag));
        if (tol_flag >= 0) {
            std::ostringstream os;
            os.precision(17);
            os << tol_flag;
            cfg.set("solver.tol", os.str());
            cfg.set("flow.tol", os.str());
        }
        if (!variant_flag.empty()) cfg.set("flow.variant", variant_flag);
        if (!out_dir.empty()) cfg.set("run.out", out_dir);

        out = cfg.get("run.out");
        fs::create_directories(out);
        cfg.echo((out / "config.effective").string());

        if (*solve) return cmd_solve(cfg, out);
        if (*continuity) return cmd_continuity(cfg, out);
        if (*flow) return cmd_flow(cfg, out);
        if (*verify) return cmd_verify(cfg, out);
        if (*study) return cmd_study(cfg, out);
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ParameterError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ConvergenceError& e) {
        std::fprintf(stderr, "non-convergence: %s\n", e.what());
        if (!out.empty())
            write_summary(out, json{{"failure", "non-convergence"},
                                    {"detail", e.what()},
                                    {"res_sup", e.residual_sup}});
        return 3;
    } catch (const StiffnessError& e) {
        std::fprintf(stderr, "positivity failure: %s\n", e.what());
        if (!out.empty())
            write_summary(out, json{{"failure", "positivity"}, {"detail", e.what()}});
        return 4;
    } catch (const PositivityError& e) {
        std::fprintf(stderr, "positivity failure: %s\n", e.what());
        if (!out.empty())
            write_summary(out, json{{"failure", "positivity"},
                                    {"detail", e.what()},
                                    {"min_eigenvalue", e.min_eigenvalue}});
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
