// Command-line front end: evaluate invariant-solution surfaces and Greeks,
// run the conformance suite, drive the PDE solver and convergence studies.
// Exit codes: 0 ok, 1 internal, 2 validation, 3 domain/model-validity.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nlbs/nlbs.hpp"

namespace {

using namespace nlbs;

SolutionFamily make_family(const RunSpec& spec) {
    const std::string& f = spec.family;
    if (f == "r") return SolutionFamily::r(spec.c, spec.d, spec.d2);
    if (f == "u1") return SolutionFamily::u1(spec.c, spec.d, spec.d2);
    if (f == "u2") return SolutionFamily::u2(spec.c, spec.d, spec.d2);
    if (f == "u3") return SolutionFamily::u3(spec.c, spec.d, spec.d2);
    if (f == "u3.1") return SolutionFamily::u3_chart1(spec.c, spec.d, spec.d2);
    if (f == "u3.2") return SolutionFamily::u3_chart2(spec.c, spec.d, spec.d2);
    if (f == "linear") return SolutionFamily::trivial_linear(spec.d, spec.d2);
    if (f == "logplus") return SolutionFamily::log_plus(spec.d, spec.d2);
    if (f == "logminus") return SolutionFamily::log_minus(spec.d, spec.d2);
    throw InvalidParameter("unknown family '" + f + "'");
}

ModelKind make_model(const RunSpec& spec) {
    const std::string& m = spec.model;
    if (m == "cjp") return ModelKind::cjp();
    if (m == "frey") return ModelKind::frey();
    if (m == "sircar") return ModelKind::sircar();
    if (m == "reaction-exp")
        return ModelKind::reaction([](double a) { return std::exp(a); },
                                   [](double a) { return std::exp(a); });
    if (m == "reaction-recip")
        return ModelKind::reaction([](double a) { return 1.0 / (1.0 - a); },
                                   [](double a) { return 1.0 / ((1.0 - a) * (1.0 - a)); });
    throw InvalidParameter("unknown model '" + m + "'");
}

ModelParams make_params(const RunSpec& spec) {
    return ModelParams::make(spec.sigma, spec.rho, spec.omega, 0);
}

void require_family_params(const SolutionFamily& fam, const ModelParams& params) {
    if (fam.tag != FamilyTag::TrivialLinear && params.b == 0.0)
        throw InvalidParameter("nonlinear families need b = omega*rho != 0");
}

std::vector<SurfaceRow> family_surface(const RunSpec& spec, bool with_fd) {
    const auto params = make_params(spec);
    const auto fam = make_family(spec);
    require_family_params(fam, params);
    const Range sr = Range::parse(spec.s_range);
    const Range tr = Range::parse(spec.t_range);
    if (!(sr.lo > 0.0)) throw InvalidParameter("s-range must be positive");

    std::vector<SurfaceRow> rows;
    rows.reserve(static_cast<std::size_t>(sr.n) * tr.n);
    for (int j = 0; j < tr.n; ++j) {
        const double t = tr.at(j);
        const auto dom = domain_of(fam, params, t);
        for (int i = 0; i < sr.n; ++i) {
            SurfaceRow row;
            row.S = sr.at(i);
            row.t = t;
            row.z = to_invariant(row.S, t, params);
            if (dom.contains(row.S)) {
                try {
                    row.u = eval_u(fam, row.S, t, params);
                    row.delta = eval_delta(fam, row.S, t, params);
                    if (with_fd) {
                        const double h = spec.fd_rel_step * row.S;
                        if (dom.contains(row.S - h) && dom.contains(row.S + h))
                            row.delta_fd = (eval_u(fam, row.S + h, t, params) -
                                            eval_u(fam, row.S - h, t, params)) / (2.0 * h);
                    }
                } catch (const OutOfDomain&) {
                    row.u.reset();
                    row.delta.reset();
                    row.delta_fd.reset();
                    row.in_domain = false;
                }
            } else {
                row.in_domain = false;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

void emit_surface(const RunSpec& spec, const std::vector<SurfaceRow>& rows, bool with_fd) {
    const std::string content = spec.format == "json" ? render_surface_json(spec, rows, with_fd)
                                                      : render_surface_csv(spec, rows, with_fd);
    emit(spec.out, content, std::cout);
}

int cmd_eval(RunSpec spec, bool with_fd) {
    emit_surface(spec, family_surface(spec, with_fd), with_fd);
    return 0;
}

int cmd_sweep(RunSpec spec) {
    if (spec.c_list.empty()) throw InvalidParameter("sweep needs --c-list v1,v2,...");
    std::vector<std::string> values;
    std::stringstream ss(spec.c_list);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) values.push_back(item);
    if (values.empty()) throw InvalidParameter("sweep needs --c-list v1,v2,...");
    for (const auto& v : values) {
        RunSpec one = spec;
        one.command = "sweep";
        one.c = std::stod(v);
        if (!spec.out.empty()) {
            const auto pos = spec.out.find("{}");
            if (pos != std::string::npos)
                one.out = spec.out.substr(0, pos) + v + spec.out.substr(pos + 2);
            else {
                const auto dot = spec.out.rfind('.');
                const auto base = dot == std::string::npos ? spec.out : spec.out.substr(0, dot);
                const auto ext = dot == std::string::npos ? "" : spec.out.substr(dot);
                one.out = base + "_c=" + v + ext;
            }
        }
        emit_surface(one, family_surface(one, false), false);
    }
    return 0;
}

PayoffFn make_payoff(const RunSpec& spec, const ModelParams& params,
                     const SolutionFamily* fam) {
    if (spec.payoff == "family") {
        if (!fam) throw InvalidParameter("payoff 'family' needs --family");
        const SolutionFamily f = *fam;
        const double T = spec.T;
        return [f, params, T](double S) { return eval_u(f, S, T, params); };
    }
    if (spec.payoff.rfind("call:", 0) == 0) {
        const double K = std::stod(spec.payoff.substr(5));
        if (!(K > 0.0)) throw InvalidParameter("call strike must be > 0");
        return [K](double S) { return std::fmax(S - K, 0.0); };
    }
    if (spec.payoff.rfind("linear:", 0) == 0) {
        double dd = 0.0, dd2 = 0.0;
        const auto body = spec.payoff.substr(7);
        if (std::sscanf(body.c_str(), "%lf:%lf", &dd, &dd2) < 1)
            throw InvalidParameter("payoff linear:d[:d2]");
        return [dd, dd2](double S) { return dd * S + dd2; };
    }
    throw InvalidParameter("unknown payoff '" + spec.payoff + "'");
}

SolverConfig make_solver_config(const RunSpec& spec) {
    SolverConfig cfg;
    if (spec.scheme == "euler") cfg.scheme = Scheme::BackwardEuler;
    else if (spec.scheme == "trapezoid") cfg.scheme = Scheme::TrapezoidalWithStartup;
    else throw InvalidParameter("scheme must be euler or trapezoid");
    if (spec.boundary == "reference") cfg.boundary = BoundaryPolicy::DirichletFromReference;
    else if (spec.boundary == "extrapolate") cfg.boundary = BoundaryPolicy::LinearExtrapolation;
    else throw InvalidParameter("boundary must be reference or extrapolate");
    cfg.newton_tol = spec.newton_tol;
    cfg.newton_max_iters = spec.newton_max;
    cfg.guard = spec.guard;
    cfg.startup_steps = spec.startup_steps;
    return cfg;
}

struct SolveSetup {
    ModelParams params;
    ModelKind kind;
    Grid grid;
    SolverConfig config;
    PayoffFn payoff;
    ReferenceFn reference;
};

SolveSetup make_solve_setup(const RunSpec& spec, int nx, int nt) {
    SolveSetup s{make_params(spec), make_model(spec),
                 Grid(), make_solver_config(spec), {}, {}};
    double x_lo = 0.0, x_hi = 0.0;
    if (!spec.x_range.empty()) {
        char rest;
        if (std::sscanf(spec.x_range.c_str(), "%lf:%lf%c", &x_lo, &x_hi, &rest) != 2)
            throw InvalidParameter("x-range must be lo:hi, got '" + spec.x_range + "'");
    } else {
        const Range sr = Range::parse(spec.s_range);
        if (!(sr.lo > 0.0)) throw InvalidParameter("s-range must be positive");
        x_lo = std::log(sr.lo);
        x_hi = std::log(sr.hi);
    }
    s.grid = Grid::uniform(x_lo, x_hi, nx, spec.T, nt);

    std::optional<SolutionFamily> fam;
    if (!spec.family.empty()) {
        fam = make_family(spec);
        require_family_params(*fam, s.params);
        const SolutionFamily f = *fam;
        const ModelParams p = s.params;
        s.reference = [f, p](double S, double t) { return eval_u(f, S, t, p); };
    }
    s.payoff = make_payoff(spec, s.params, fam ? &*fam : nullptr);
    if (s.config.boundary == BoundaryPolicy::DirichletFromReference && !s.reference)
        throw InvalidParameter("boundary 'reference' needs --family (or use extrapolate)");
    return s;
}

int cmd_solve(RunSpec spec) {
    auto setup = make_solve_setup(spec, spec.nx, spec.nt);
    const auto surf =
        solve_terminal_value(setup.kind, setup.params, setup.payoff, setup.grid, setup.config,
                             setup.reference);
    const auto delta = discrete_delta(surf);
    const int nx = surf.grid.nx();
    std::vector<SurfaceRow> rows;
    rows.reserve(surf.u.size());
    for (int lvl = surf.grid.nt; lvl >= 0; --lvl) {   // ascending t
        for (int i = 0; i < nx; ++i) {
            SurfaceRow row;
            row.S = std::exp(surf.grid.x[i]);
            row.t = surf.t[lvl];
            row.z = to_invariant(row.S, row.t, setup.params);
            row.u = surf.at(lvl, i);
            row.delta = delta[static_cast<std::size_t>(lvl) * nx + i];
            rows.push_back(row);
        }
    }
    emit_surface(spec, rows, false);
    std::cerr << "solved " << spec.nx << "x" << spec.nt << " in "
              << detail::fmt(surf.solve_seconds) << " s, " << surf.total_newton_iters
              << " newton iterations\n";
    return 0;
}

int cmd_converge(RunSpec spec) {
    std::vector<std::pair<int, int>> ladder;
    std::stringstream ss(spec.levels);
    for (std::string item; std::getline(ss, item, ',');) {
        int nx = 0, nt = 0;
        if (std::sscanf(item.c_str(), "%d:%d", &nx, &nt) != 2)
            throw InvalidParameter("levels must be nx:nt[,nx:nt...]");
        ladder.emplace_back(nx, nt);
    }
    if (ladder.empty()) throw InvalidParameter("levels must be nx:nt[,nx:nt...]");
    auto setup = make_solve_setup(spec, ladder.front().first, ladder.front().second);
    if (!setup.reference) throw InvalidParameter("converge needs --family as reference");
    const auto table =
        convergence_study(setup.kind, setup.params, setup.reference, ladder, setup.grid.x.front(),
                          setup.grid.x.back(), spec.T, setup.config);

    std::ostringstream os;
    if (spec.format == "json") {
        nlohmann::json j;
        j["runspec"] = spec.to_json();
        j["columns"] = {"level", "nx", "nt", "h", "dt", "err_max", "order"};
        auto& rows = j["rows"] = nlohmann::json::array();
        for (std::size_t i = 0; i < table.levels.size(); ++i) {
            const auto& l = table.levels[i];
            rows.push_back({i, l.nx, l.nt, l.h, l.dt, l.err_max,
                            std::isnan(l.order) ? nlohmann::json(nullptr) : nlohmann::json(l.order)});
        }
        os << j.dump(1) << "\n";
    } else {
        os << "# nlbs converge table\n# runspec: " << spec.to_json().dump() << "\n";
        os << "level,nx,nt,h,dt,err_max,order\n";
        for (std::size_t i = 0; i < table.levels.size(); ++i) {
            const auto& l = table.levels[i];
            os << i << ',' << l.nx << ',' << l.nt << ',' << detail::fmt(l.h) << ','
               << detail::fmt(l.dt) << ',' << detail::fmt(l.err_max) << ','
               << (std::isnan(l.order) ? std::string() : detail::fmt(l.order)) << "\n";
        }
    }
    emit(spec.out, os.str(), std::cout);
    return 0;
}

int cmd_residual(RunSpec spec) {
    ConformanceConfig cfg;
    cfg.sigma = spec.sigma;
    cfg.b = spec.omega * spec.rho;
    if (cfg.b == 0.0) throw InvalidParameter("residual suite needs b = omega*rho != 0");
    cfg.c_r = std::fabs(spec.c);
    cfg.c_u = std::fabs(spec.c);
    if (cfg.c_r == 0.0) throw InvalidParameter("residual suite needs c != 0");
    const auto report = run_conformance(cfg);

    std::ostringstream os;
    if (spec.format == "json") {
        nlohmann::json j;
        j["runspec"] = spec.to_json();
        j["pde_tol"] = report.pde_tol;
        j["ode_tol"] = report.ode_tol;
        auto& gates = j["gates"] = nlohmann::json::array();
        for (const auto& g : report.gates)
            gates.push_back({{"family", g.family},
                             {"max_pde_residual", g.max_pde_residual},
                             {"max_ode_residual", g.max_ode_residual},
                             {"points", g.points},
                             {"skipped", g.skipped},
                             {"pass", g.pass(report.pde_tol, report.ode_tol)}});
        auto& devs = j["published_formula_deviations"] = nlohmann::json::array();
        for (const auto& d : report.discrepancies)
            devs.push_back({{"id", d.id}, {"note", d.note}, {"magnitude", d.magnitude}});
        j["gates_pass"] = report.gates_pass();
        os << j.dump(1) << "\n";
    } else {
        os << "# runspec: " << spec.to_json().dump() << "\n";
        report.write_text(os);
    }
    emit(spec.out, os.str(), std::cout);
    if (!report.gates_pass()) throw OutOfDomain("conformance gates exceeded tolerance");
    return 0;
}

std::string g_config_path;  // consumed by the pre-scan; option exists for parsing

void add_common(CLI::App* cmd, RunSpec& spec) {
    cmd->add_option("--config", g_config_path, "JSON RunSpec file (flags override it)");
    cmd->add_option("--sigma", spec.sigma, "volatility (> 0)")->capture_default_str();
    cmd->add_option("--rho", spec.rho, "liquidity parameter (>= 0)")->capture_default_str();
    cmd->add_option("--omega", spec.omega, "price-impact scale in lambda(S) = omega S^k")
        ->capture_default_str();
    cmd->add_option("--c", spec.c, "integration constant (r: c > 0; u-families use |c|)")
        ->capture_default_str();
    cmd->add_option("--d", spec.d, "linear-term coefficient")->capture_default_str();
    cmd->add_option("--d2", spec.d2, "additive constant")->capture_default_str();
    cmd->add_option("--format", spec.format, "csv or json")->capture_default_str();
    cmd->add_option("--out", spec.out, "output path (default stdout)");
}

void add_family(CLI::App* cmd, RunSpec& spec, bool required) {
    auto* opt = cmd->add_option("--family", spec.family,
                                "r|u1|u2|u3|u3.1|u3.2|linear|logplus|logminus");
    if (required) opt->required();
}

void add_ranges(CLI::App* cmd, RunSpec& spec) {
    cmd->add_option("--s-range", spec.s_range, "price grid lo:hi:n")->capture_default_str();
    cmd->add_option("--t-range", spec.t_range, "time grid lo:hi:n")->capture_default_str();
}

void add_solver(CLI::App* cmd, RunSpec& spec) {
    cmd->add_option("--model", spec.model, "cjp|frey|sircar|reaction-exp|reaction-recip")
        ->capture_default_str();
    cmd->add_option("--payoff", spec.payoff, "family | call:K | linear:d[:d2]")
        ->capture_default_str();
    cmd->add_option("--boundary", spec.boundary, "reference | extrapolate")->capture_default_str();
    cmd->add_option("--scheme", spec.scheme, "euler | trapezoid")->capture_default_str();
    cmd->add_option("--x-range", spec.x_range, "log-price extent lo:hi (overrides --s-range)");
    cmd->add_option("--T", spec.T, "terminal time")->capture_default_str();
    cmd->add_option("--newton-tol", spec.newton_tol, "newton residual tolerance")
        ->capture_default_str();
    cmd->add_option("--newton-max", spec.newton_max, "newton iteration cap")->capture_default_str();
    cmd->add_option("--guard", spec.guard, "denominator guard threshold")->capture_default_str();
    cmd->add_option("--startup-steps", spec.startup_steps, "backward-Euler startup steps")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    // --config FILE is applied before flag parsing so flags override it.
    RunSpec spec;
    for (int i = 1; i < argc - 1; ++i) {
        if (std::string(argv[i]) == "--config") {
            std::ifstream is(argv[i + 1]);
            if (!is) {
                std::cerr << "error: cannot read config '" << argv[i + 1] << "'\n";
                return 2;
            }
            try {
                nlohmann::json j;
                is >> j;
                spec.load_json(j);
            } catch (const std::exception& e) {
                std::cerr << "error: bad config: " << e.what() << "\n";
                return 2;
            }
        }
    }

    CLI::App app{"nonlinear Black-Scholes laboratory"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON RunSpec file (flags override it)");

    auto* eval = app.add_subcommand("eval", "evaluate an invariant-solution surface");
    add_family(eval, spec, true);
    add_common(eval, spec);
    add_ranges(eval, spec);

    auto* greeks = app.add_subcommand("greeks", "analytic and finite-difference Delta");
    add_family(greeks, spec, true);
    add_common(greeks, spec);
    add_ranges(greeks, spec);
    greeks->add_option("--fd-rel-step", spec.fd_rel_step, "relative FD step for Delta")
        ->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "evaluate a family over a list of c values");
    add_family(sweep, spec, true);
    add_common(sweep, spec);
    add_ranges(sweep, spec);
    sweep->add_option("--c-list", spec.c_list, "comma-separated c values")->required();

    auto* solve = app.add_subcommand("solve", "terminal-value PDE solve");
    add_family(solve, spec, false);
    add_common(solve, spec);
    add_solver(solve, spec);
    solve->add_option("--s-range", spec.s_range, "price grid lo:hi:n")->capture_default_str();
    solve->add_option("--nx", spec.nx, "x nodes")->capture_default_str();
    solve->add_option("--nt", spec.nt, "time steps")->capture_default_str();

    auto* converge = app.add_subcommand("converge", "grid-refinement study against a family");
    add_family(converge, spec, true);
    add_common(converge, spec);
    add_solver(converge, spec);
    converge->add_option("--s-range", spec.s_range, "price grid lo:hi:n")->capture_default_str();
    converge->add_option("--levels", spec.levels, "ladder nx:nt[,nx:nt...]")->capture_default_str();

    auto* residual = app.add_subcommand("residual", "conformance report (gates + deviations)");
    add_common(residual, spec);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (eval->parsed()) {
            spec.command = "eval";
            return cmd_eval(spec, false);
        }
        if (greeks->parsed()) {
            spec.command = "greeks";
            return cmd_eval(spec, true);
        }
        if (sweep->parsed()) {
            spec.command = "sweep";
            return cmd_sweep(spec);
        }
        if (solve->parsed()) {
            spec.command = "solve";
            return cmd_solve(spec);
        }
        if (converge->parsed()) {
            spec.command = "converge";
            return cmd_converge(spec);
        }
        if (residual->parsed()) {
            spec.command = "residual";
            return cmd_residual(spec);
        }
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const InvalidParameter& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const ZeroC& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const ZeroB& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const Unsupported& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
