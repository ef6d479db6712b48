#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nlbs/detail/numerics.hpp"
#include "nlbs/errors.hpp"
#include "nlbs/model.hpp"

// Terminal-value solver on a log-price grid. The march is implicit
// (backward Euler or trapezoidal with backward-Euler startup steps) with a
// damped Newton inner iteration per step. In x = log S the diffusion term
// S^2 u_SS becomes u_xx - u_x, matching the invariant coordinate.

namespace nlbs {

struct Grid {
    std::vector<double> x;   // strictly increasing log-price nodes
    double T = 0.0;
    int nt = 0;

    static Grid uniform(double x_lo, double x_hi, int nx, double T, int nt) {
        if (!(x_hi > x_lo)) throw InvalidParameter("grid requires x_hi > x_lo");
        if (nx < 5) throw InvalidParameter("grid requires at least 3 interior nodes");
        if (!(T > 0.0) || nt < 1) throw InvalidParameter("grid requires T > 0 and nt >= 1");
        Grid g;
        g.x.resize(nx);
        const double h = (x_hi - x_lo) / (nx - 1);
        for (int i = 0; i < nx; ++i) g.x[i] = x_lo + h * i;
        g.T = T;
        g.nt = nt;
        return g;
    }

    int nx() const { return static_cast<int>(x.size()); }
    double h() const { return x[1] - x[0]; }
    double dt() const { return T / nt; }
    // time levels from T down to 0 inclusive
    double t_level(int k) const { return T * (nt - k) / nt; }
};

enum class Scheme { BackwardEuler, TrapezoidalWithStartup };
enum class BoundaryPolicy { DirichletFromReference, LinearExtrapolation };

struct SolverConfig {
    Scheme scheme = Scheme::TrapezoidalWithStartup;
    int startup_steps = 2;              // backward-Euler steps before trapezoid
    BoundaryPolicy boundary = BoundaryPolicy::DirichletFromReference;
    double newton_tol = 1e-9;           // on the u_t + N residual scale
    int newton_max_iters = 50;
    double guard = 1e-8;                // |1 - rho S u_SS| floor on accepted steps
    int max_line_search = 40;
};

struct SolutionSurface {
    Grid grid;
    std::vector<double> t;              // descending, size nt+1
    std::vector<double> u;              // level-major, (nt+1) x nx
    std::vector<double> delta;          // filled by discrete_delta
    std::string model;
    ModelParams params;
    SolverConfig config;
    double solve_seconds = 0.0;
    long total_newton_iters = 0;

    double at(int level, int i) const { return u[static_cast<std::size_t>(level) * grid.nx() + i]; }
    std::vector<double> level_values(int level) const {
        const auto* base = u.data() + static_cast<std::size_t>(level) * grid.nx();
        return {base, base + grid.nx()};
    }
};

using PayoffFn = std::function<double(double S)>;
using ReferenceFn = std::function<double(double S, double t)>;

namespace detail {

struct BoundaryClosure {
    double k0 = 0.0, k1 = 0.0, k2 = 0.0;  // residual row: k0 + k1 u_1 + k2 u_2 - u_edge
};

// Discretization of w = S^2 u_SS on the geometric price grid: the
// non-uniform second difference in S, which has constant coefficients in
// index space, annihilates alpha + beta*S exactly (so linear payoffs are
// discretely stationary) and is second-order accurate in h = dx.
struct PriceStencil {
    double cm = 0.0, cc = 0.0, cp = 0.0;  // w_i = cm u_{i-1} + cc u_i + cp u_{i+1}
    double dx = 0.0;

    explicit PriceStencil(double h) : dx(h) {
        const double em = -std::expm1(-h);      // 1 - e^{-h}
        const double ep = std::expm1(h);        // e^{h} - 1
        cm = 2.0 / (em * (ep + em));
        cp = 2.0 / (ep * (ep + em));
        cc = -(cm + cp);
    }
    double w(double um, double uc, double up) const { return cm * um + cc * uc + cp * up; }
    double ux(double um, double up) const { return (up - um) / (2.0 * dx); }
};

// Tridiagonal solve where the first and last rows may carry one extra entry
// (columns 2 and n-3), as produced by the extrapolation boundary rows.
// All bands are overwritten.
inline void solve_tridiag_corners(std::vector<double>& lo, std::vector<double>& di,
                                  std::vector<double>& up, double corner_first,
                                  double corner_last, std::vector<double>& rhs) {
    const int n = static_cast<int>(di.size());
    // forward elimination; row 0 spans cols {0, 1, 2}
    for (int i = 1; i < n; ++i) {
        const double m = lo[i] / di[i - 1];
        di[i] -= m * up[i - 1];
        rhs[i] -= m * rhs[i - 1];
        if (i == 1 && corner_first != 0.0) up[i] -= m * corner_first;
    }
    // last row extra entry at col n-3: eliminate through the reduced rows
    if (corner_last != 0.0 && n >= 3) {
        // after forward elimination, row n-3 spans {n-3, n-2}; the extra
        // coefficient was not part of the sweep, remove it now
        const double m = corner_last / di[n - 3];
        // contributes to col n-2; row n-1 already reduced against n-2 above,
        // so fold the correction into the rhs chain explicitly
        const double extra_on_nm2 = -m * up[n - 3];
        const double extra_rhs = -m * rhs[n - 3];
        const double m2 = extra_on_nm2 / di[n - 2];
        rhs[n - 1] += extra_rhs - m2 * rhs[n - 2];
        di[n - 1] -= m2 * up[n - 2];
    }
    rhs[n - 1] /= di[n - 1];
    for (int i = n - 2; i >= 0; --i) {
        double v = rhs[i] - up[i] * rhs[i + 1];
        if (i == 0 && corner_first != 0.0) v -= corner_first * rhs[2];
        rhs[i] = v / di[i];
    }
}

}  // namespace detail

/// March the terminal-value problem u(T, S) = h(S) backward to t = 0.
/// DirichletFromReference samples `reference` at the edges each level;
/// LinearExtrapolation closes the edges with u_SS = 0 (linear in S).
inline SolutionSurface solve_terminal_value(const ModelKind& kind, const ModelParams& params,
                                            const PayoffFn& payoff, const Grid& grid,
                                            const SolverConfig& config,
                                            const ReferenceFn& reference = {}) {
    if (config.boundary == BoundaryPolicy::DirichletFromReference && !reference)
        throw InvalidParameter("dirichlet-from-reference needs a reference solution");
    if (!(config.newton_tol > 0.0)) throw InvalidParameter("newton_tol must be > 0");
    if (!(config.guard >= 1e-12)) throw InvalidParameter("guard must be >= 1e-12");

    const auto t_start = std::chrono::steady_clock::now();
    const int nx = grid.nx();
    const int ni = nx - 2;
    const double h = grid.h();
    const double dt = grid.dt();
    const double half_s2 = 0.5 * params.sigma * params.sigma;

    std::vector<double> S(nx), emx(nx);
    for (int i = 0; i < nx; ++i) {
        S[i] = std::exp(grid.x[i]);
        emx[i] = 1.0 / S[i];
    }

    SolutionSurface surf;
    surf.grid = grid;
    surf.model = kind.name();
    surf.params = params;
    surf.config = config;
    surf.t.resize(grid.nt + 1);
    surf.u.assign(static_cast<std::size_t>(grid.nt + 1) * nx, 0.0);

    std::vector<double> u(nx);
    for (int i = 0; i < nx; ++i) {
        u[i] = payoff(S[i]);
        if (!detail::finite(u[i])) throw InvalidParameter("payoff not finite on the grid");
    }
    surf.t[0] = grid.T;
    std::copy(u.begin(), u.end(), surf.u.begin());

    // N_i(v), plus a = rho u_S and m = rho S u_SS per interior node
    const detail::PriceStencil st(h);
    std::vector<double> N(ni), A(ni), M(ni), W(ni);
    const auto eval_N = [&](const std::vector<double>& v) {
        for (int j = 0; j < ni; ++j) {
            const int i = j + 1;
            const double w = st.w(v[i - 1], v[i], v[i + 1]);
            const double ux = st.ux(v[i - 1], v[i + 1]);
            A[j] = params.rho * ux * emx[i];
            M[j] = params.rho * w * emx[i];
            W[j] = w;
            N[j] = half_s2 * W[j] * adjusted_volatility(kind, A[j], M[j], config.guard).v;
        }
    };

    const auto closure = [&](bool left, double t_new) {
        detail::BoundaryClosure c;
        if (config.boundary == BoundaryPolicy::DirichletFromReference) {
            c.k0 = reference(left ? S.front() : S.back(), t_new);
            return c;
        }
        // u_SS -> 0: extrapolate linearly in S from the two adjacent nodes
        const int e = left ? 0 : nx - 1;
        const int i1 = left ? 1 : nx - 2;
        const int i2 = left ? 2 : nx - 3;
        const double g = (S[e] - S[i1]) / (S[i2] - S[i1]);
        c.k1 = 1.0 - g;
        c.k2 = g;
        return c;
    };

    std::vector<double> Nold(ni), G(nx), Gt(nx), lo(nx), di(nx), up(nx), delta(nx), trial(nx);

    for (int k = 0; k < grid.nt; ++k) {
        const bool startup = config.scheme == Scheme::TrapezoidalWithStartup && k < config.startup_steps;
        const double th = (config.scheme == Scheme::BackwardEuler || startup) ? 1.0 : 0.5;
        const double t_new = grid.t_level(k + 1);
        const auto cl = closure(true, t_new);
        const auto cr = closure(false, t_new);
        const std::string where = " at step " + std::to_string(k + 1) + " (t = " +
                                  detail::fmt(t_new) + ")";

        // boundary nodes are unknowns with their own (linear) residual rows,
        // so the iteration starts from the smooth previous level
        const auto residual = [&](const std::vector<double>& w, std::vector<double>& g_out) {
            eval_N(w);
            double rmax = 0.0;
            for (int j = 0; j < ni; ++j) {
                g_out[j + 1] = u[j + 1] - w[j + 1] + dt * (th * N[j] + (1.0 - th) * Nold[j]);
                rmax = std::fmax(rmax, std::fabs(g_out[j + 1]));
            }
            g_out[0] = cl.k0 + cl.k1 * w[1] + cl.k2 * w[2] - w[0];
            g_out[nx - 1] = cr.k0 + cr.k1 * w[nx - 2] + cr.k2 * w[nx - 3] - w[nx - 1];
            rmax = std::fmax(rmax, std::fabs(g_out[0]));
            rmax = std::fmax(rmax, std::fabs(g_out[nx - 1]));
            return rmax;
        };

        std::vector<double> v = u;
        double res;
        try {
            eval_N(u);
            Nold = N;
            res = residual(v, G);
        } catch (const DegenerateDenominator& e) {
            throw DenominatorBreach(std::string(e.what()) + where);
        }
        double phi = 0.0;
        for (double g : G) phi += g * g;

        int it = 0;
        while (res > dt * config.newton_tol) {
            if (it++ >= config.newton_max_iters)
                throw NewtonDivergence("newton stalled" + where + ", residual " +
                                       detail::fmt(res / dt) + " after " +
                                       std::to_string(config.newton_max_iters) + " iterations");
            eval_N(v);
            for (int j = 0; j < ni; ++j) {
                const int i = j + 1;
                const auto f = adjusted_volatility(kind, A[j], M[j], config.guard);
                const double dN_dw = half_s2 * (f.v + W[j] * f.dv_dm * params.rho * emx[i]);
                const double dN_dux = half_s2 * W[j] * f.dv_da * params.rho * emx[i];
                lo[i] = dt * th * (dN_dw * st.cm - dN_dux / (2.0 * h));
                di[i] = -1.0 + dt * th * dN_dw * st.cc;
                up[i] = dt * th * (dN_dw * st.cp + dN_dux / (2.0 * h));
                delta[i] = -G[i];
            }
            di[0] = -1.0;
            up[0] = cl.k1;
            delta[0] = -G[0];
            lo[nx - 1] = cr.k1;
            di[nx - 1] = -1.0;
            delta[nx - 1] = -G[nx - 1];
            detail::solve_tridiag_corners(lo, di, up, cl.k2, cr.k2, delta);

            double lam = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < config.max_line_search; ++ls) {
                for (int i = 0; i < nx; ++i) trial[i] = v[i] + lam * delta[i];
                double rt;
                try {
                    rt = residual(trial, Gt);
                } catch (const DegenerateDenominator&) {
                    lam *= 0.5;
                    continue;
                }
                double pt = 0.0;
                for (double g : Gt) pt += g * g;
                if (pt <= phi * (1.0 - 1e-4 * lam) || rt <= dt * config.newton_tol) {
                    v = trial;
                    G = Gt;
                    phi = pt;
                    res = rt;
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            if (!accepted)
                throw NewtonDivergence("newton line search failed" + where + ", residual " +
                                       detail::fmt(res / dt));
        }
        surf.total_newton_iters += it;

        // guard contract on the accepted level (A/M hold the accepted iterate)
        if (kind.tag != ModelTag::CJP) {
            for (int j = 0; j < ni; ++j) {
                double den = 1.0 - M[j];
                if (kind.tag == ModelTag::Sircar) den = 1.0 - A[j] - M[j];
                if (std::fabs(den) < config.guard)
                    throw DenominatorBreach("denominator " + detail::fmt(den) + " at S = " +
                                            detail::fmt(S[j + 1]) + where);
            }
        }

        u = v;
        surf.t[k + 1] = t_new;
        std::copy(u.begin(), u.end(), surf.u.begin() + static_cast<std::size_t>(k + 1) * nx);
    }

    surf.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return surf;
}

/// Centered differences of u in S per time level (one-sided at the edges).
inline std::vector<double> discrete_delta(const SolutionSurface& surf) {
    const int nx = surf.grid.nx();
    std::vector<double> S(nx);
    for (int i = 0; i < nx; ++i) S[i] = std::exp(surf.grid.x[i]);
    std::vector<double> d(surf.u.size());
    for (std::size_t lvl = 0; lvl < surf.t.size(); ++lvl) {
        const double* ul = surf.u.data() + lvl * nx;
        double* dl = d.data() + lvl * nx;
        dl[0] = (ul[1] - ul[0]) / (S[1] - S[0]);
        for (int i = 1; i < nx - 1; ++i) dl[i] = (ul[i + 1] - ul[i - 1]) / (S[i + 1] - S[i - 1]);
        dl[nx - 1] = (ul[nx - 1] - ul[nx - 2]) / (S[nx - 1] - S[nx - 2]);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Convergence studies

struct ConvergenceLevel {
    int nx = 0;
    int nt = 0;
    double h = 0.0;
    double dt = 0.0;
    double err_max = 0.0;
    double order = std::numeric_limits<double>::quiet_NaN();  // vs previous level
};

struct ConvergenceTable {
    std::vector<ConvergenceLevel> levels;
};

/// Solve on each (nx, nt) level with terminal data and Dirichlet boundaries
/// from `reference`, and report max-norm errors at t = 0 with observed orders.
inline ConvergenceTable convergence_study(const ModelKind& kind, const ModelParams& params,
                                          const ReferenceFn& reference,
                                          const std::vector<std::pair<int, int>>& ladder,
                                          double x_lo, double x_hi, double T,
                                          SolverConfig config = {}) {
    if (!reference) throw InvalidParameter("convergence_study needs a reference solution");
    config.boundary = BoundaryPolicy::DirichletFromReference;
    ConvergenceTable table;
    for (const auto& [nx, nt] : ladder) {
        const Grid grid = Grid::uniform(x_lo, x_hi, nx, T, nt);
        const auto payoff = [&](double S) { return reference(S, T); };
        const auto surf = solve_terminal_value(kind, params, payoff, grid, config, reference);
        ConvergenceLevel lvl;
        lvl.nx = nx;
        lvl.nt = nt;
        lvl.h = grid.h();
        lvl.dt = grid.dt();
        double scale = 0.0;
        for (int i = 0; i < nx; ++i) {
            const double ue = reference(std::exp(grid.x[i]), 0.0);
            scale = std::fmax(scale, std::fabs(ue));
            lvl.err_max = std::fmax(lvl.err_max, std::fabs(surf.at(grid.nt, i) - ue));
        }
        // orders are meaningless once errors sit at the Newton-tolerance floor
        const double floor = 10.0 * grid.dt() * config.newton_tol * std::fmax(1.0, scale);
        if (!table.levels.empty() && lvl.err_max > floor && table.levels.back().err_max > floor)
            lvl.order = std::log2(table.levels.back().err_max / lvl.err_max);
        table.levels.push_back(lvl);
    }
    return table;
}

/// Truncation error of the theta-step on an exact solution (no marching):
/// the discrete operator applied to reference data between two time levels.
inline double injection_truncation_error(const ModelKind& kind, const ModelParams& params,
                                         const ReferenceFn& reference, const Grid& grid,
                                         double theta) {
    const int nx = grid.nx();
    const double dt = grid.dt();
    const detail::PriceStencil st(grid.h());
    std::vector<double> S(nx), ua(nx), ub(nx);
    for (int i = 0; i < nx; ++i) S[i] = std::exp(grid.x[i]);
    double worst = 0.0;
    for (int k = 0; k < grid.nt; ++k) {
        const double ta = grid.t_level(k), tb = grid.t_level(k + 1);
        for (int i = 0; i < nx; ++i) {
            ua[i] = reference(S[i], ta);
            ub[i] = reference(S[i], tb);
        }
        for (int i = 1; i < nx - 1; ++i) {
            const auto Nof = [&](const std::vector<double>& v) {
                const double w = st.w(v[i - 1], v[i], v[i + 1]);
                const double a = params.rho * st.ux(v[i - 1], v[i + 1]) / S[i];
                const double m = params.rho * w / S[i];
                return 0.5 * params.sigma * params.sigma * w *
                       adjusted_volatility(kind, a, m).v;
            };
            const double r = (ua[i] - ub[i]) / dt + theta * Nof(ub) + (1.0 - theta) * Nof(ua);
            worst = std::fmax(worst, std::fabs(r));
        }
    }
    return worst;
}

}  // namespace nlbs
