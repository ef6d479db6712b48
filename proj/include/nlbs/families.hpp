#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "nlbs/detail/numerics.hpp"
#include "nlbs/errors.hpp"
#include "nlbs/model.hpp"

// Invariant solutions of the reduced-form model for q = -4, i.e. along
// z = log S - (sigma^2/8) t. Every family is parametrized by a root p(z) of
//
//     (p+1)^2 (p-2) = 2 c exp(-3z/2)
//
// with v_z = (p^2-1)/b and v = -(p^2-4)/b - (2/b) log|p-2| + const. The
// closed forms below are algebraically identical to that representation but
// arranged so no catastrophic cancellation occurs near the branch limits
// p -> 2 (R, U1) and the fold p -> 1 (U1/U2 coincidence).

namespace nlbs {

enum class FamilyTag { R, U1, U2, U3, U3Chart1, U3Chart2, TrivialLinear, LogPlus, LogMinus };

inline const char* family_name(FamilyTag t) {
    switch (t) {
        case FamilyTag::R: return "r";
        case FamilyTag::U1: return "u1";
        case FamilyTag::U2: return "u2";
        case FamilyTag::U3: return "u3";
        case FamilyTag::U3Chart1: return "u3.1";
        case FamilyTag::U3Chart2: return "u3.2";
        case FamilyTag::TrivialLinear: return "linear";
        case FamilyTag::LogPlus: return "logplus";
        case FamilyTag::LogMinus: return "logminus";
    }
    return "?";
}

/// One invariant solution: family identity plus its constants. R requires
/// c > 0; the U families live on c < 0 and store c as -|c|.
struct SolutionFamily {
    FamilyTag tag = FamilyTag::TrivialLinear;
    double c = 0.0;
    double d = 0.0;
    double d2 = 0.0;

    double c_abs() const { return std::fabs(c); }

    static SolutionFamily r(double c, double d = 0.0, double d2 = 0.0) {
        if (c == 0.0) throw ZeroC("family r requires c > 0");
        if (!(c > 0.0)) throw InvalidParameter("family r requires c > 0");
        return {FamilyTag::R, c, d, d2};
    }
    static SolutionFamily u1(double c, double d = 0.0, double d2 = 0.0) { return u_family(FamilyTag::U1, c, d, d2); }
    static SolutionFamily u2(double c, double d = 0.0, double d2 = 0.0) { return u_family(FamilyTag::U2, c, d, d2); }
    static SolutionFamily u3(double c, double d = 0.0, double d2 = 0.0) { return u_family(FamilyTag::U3, c, d, d2); }
    static SolutionFamily u3_chart1(double c, double d = 0.0, double d2 = 0.0) { return u_family(FamilyTag::U3Chart1, c, d, d2); }
    static SolutionFamily u3_chart2(double c, double d = 0.0, double d2 = 0.0) { return u_family(FamilyTag::U3Chart2, c, d, d2); }
    static SolutionFamily trivial_linear(double d, double d2 = 0.0) { return {FamilyTag::TrivialLinear, 0.0, d, d2}; }
    static SolutionFamily log_plus(double d = 0.0, double d2 = 0.0) { return {FamilyTag::LogPlus, 0.0, d, d2}; }
    static SolutionFamily log_minus(double d = 0.0, double d2 = 0.0) { return {FamilyTag::LogMinus, 0.0, d, d2}; }

  private:
    static SolutionFamily u_family(FamilyTag tag, double c, double d, double d2) {
        if (c == 0.0) throw ZeroC("u-families require c != 0");
        return {tag, -std::fabs(c), d, d2};
    }
};

/// z = log S - (sigma^2/8) t.
inline double to_invariant(double S, double t, const ModelParams& params) {
    if (!(S > 0.0)) throw NonPositivePrice("to_invariant requires S > 0");
    return std::log(S) - params.sigma * params.sigma / 8.0 * t;
}

/// Left end of the three-real-roots region: z* = -(2/3) log(2/|c|).
inline double z_star(double c_abs) { return (2.0 / 3.0) * std::log(0.5 * c_abs); }

/// Price at which z = z*: S*(t) = (|c|/2)^(2/3) exp(sigma^2 t / 8).
inline double domain_boundary_s(double c_abs, double t, const ModelParams& params) {
    return std::exp(z_star(c_abs) + params.sigma * params.sigma / 8.0 * t);
}

// ---------------------------------------------------------------------------
// Cubic inversion

struct CubicRoot {
    double p = 0.0;
    int multiplicity = 1;
};

namespace detail {

// Relative width treated as the exact fold w = -2 (double root).
inline constexpr double kFoldTol = 64.0 * 2.220446049250313e-16;

inline double cubic_f(double p, double w) { return ((p * p - 3.0) * p) - (2.0 + 2.0 * w); }
inline double cubic_df(double p) { return 3.0 * p * p - 3.0; }

inline double polish_root(double p, double w) {
    for (int i = 0; i < 2; ++i) {
        const double df = cubic_df(p);
        if (std::fabs(df) < 1e-6) break;
        p -= cubic_f(p, w) / df;
    }
    return p;
}

}  // namespace detail

/// Real roots of (p+1)^2(p-2) = 2 c e^{-3z/2} (Plus) or of the mirrored
/// cubic (p-1)^2(p+2) = 2 c e^{-3z/2} (Minus), with multiplicities.
inline std::vector<CubicRoot> solve_p(double z, double c, Branch branch) {
    if (c == 0.0) throw ZeroC("solve_p: c = 0 is excluded");
    if (branch == Branch::Minus) {
        auto roots = solve_p(z, -c, Branch::Plus);
        for (auto& r : roots) r.p = -r.p;
        std::sort(roots.begin(), roots.end(), [](const CubicRoot& a, const CubicRoot& b) {
            return a.p < b.p;
        });
        return roots;
    }
    const double w = c * std::exp(-1.5 * z);
    if (!detail::finite(w)) throw InvalidParameter("solve_p: c*exp(-3z/2) overflows");
    std::vector<CubicRoot> roots;
    if (std::fabs(w + 2.0) <= detail::kFoldTol * std::fmax(1.0, std::fabs(w))) {
        roots.push_back({-2.0, 1});
        roots.push_back({1.0, 2});
    } else if (w > 0.0) {
        roots.push_back({detail::polish_root(2.0 * std::cosh(detail::acosh1p(w) / 3.0), w), 1});
    } else if (w > -2.0) {
        const double th = detail::theta_from_x(-w);
        roots.push_back({detail::polish_root(2.0 * std::cos((2.0 * detail::kPi + th) / 3.0), w), 1});
        roots.push_back({detail::polish_root(2.0 * std::cos((2.0 * detail::kPi - th) / 3.0), w), 1});
        roots.push_back({detail::polish_root(2.0 * std::cos(th / 3.0), w), 1});
    } else {
        roots.push_back({detail::polish_root(-2.0 * std::cosh(detail::acosh1p(-w - 2.0) / 3.0), w), 1});
    }
    return roots;
}

// ---------------------------------------------------------------------------
// Family evaluation core

namespace detail {

struct FamilyCore {
    double v_core = 0.0;   // v at d = 0
    double v_z = 0.0;
    double v_zz = 0.0;     // +-inf exactly at the U1/U2 fold
    double p = 0.0;
    bool has_p = false;
};

// Shared additive constant of the c<0 families, pinned by their closed forms.
inline double u_const(double b, double c_abs) {
    return (2.0 / (3.0 * b)) * std::log(2.0 / c_abs) + (4.0 * std::log(2.0) - 2.0) / b;
}

// v from p with explicit, cancellation-free 2-p and p-1.
inline FamilyCore core_from_p(double p, double two_minus_p, double p_minus_1, double b,
                              double constant) {
    FamilyCore f;
    f.p = p;
    f.has_p = true;
    f.v_core = two_minus_p * (p + 2.0) / b - (2.0 / b) * std::log(two_minus_p) + constant;
    f.v_z = (p * p - 1.0) / b;
    f.v_zz = p * (p + 1.0) * two_minus_p / (b * p_minus_1);
    return f;
}

inline void require_b(double b) {
    if (b == 0.0)
        throw ZeroB("b = omega*rho = 0: only the linear family d1 + d2*exp(-3z/4) remains");
}

// X = |c| e^{-3z/2} clamped into [0, 2] for the trigonometric charts.
inline double chart_x(double z, double c_abs) {
    const double x = c_abs * std::exp(-1.5 * z);
    if (x > 2.0) {
        if (x > 2.0 * (1.0 + 1e-12)) throw OutOfDomain("z below the three-root region");
        return 2.0;
    }
    return x;
}

inline FamilyCore core_r(double z, double c, double b) {
    const double w = c * std::exp(-1.5 * z);
    const double g = (2.0 / 3.0) * std::asinh(std::sqrt(0.5 * w));
    const double p = 2.0 * std::cosh(g);
    const double sh = std::sinh(0.5 * g);
    const double p_minus_2 = 4.0 * sh * sh;
    FamilyCore f;
    f.p = p;
    f.has_p = true;
    f.v_core = -p_minus_2 * (p + 2.0) / b - (2.0 / b) * std::log(p_minus_2) - 2.0 / b;
    f.v_z = (p * p - 1.0) / b;
    f.v_zz = -p * (p + 1.0) * p_minus_2 / (b * (p - 1.0));
    return f;
}

inline FamilyCore core_u1(double z, double c_abs, double b) {
    const double th = theta_from_x(chart_x(z, c_abs));
    const double s6 = std::sin(th / 6.0);
    const double two_minus_p = 4.0 * s6 * s6;
    const double p = 2.0 - two_minus_p;
    const double p_minus_1 = 4.0 * std::sin((kPi + th) / 6.0) * std::sin((kPi - th) / 6.0);
    return core_from_p(p, two_minus_p, p_minus_1, b, u_const(b, c_abs));
}

inline FamilyCore core_u2(double z, double c_abs, double b) {
    const double th = theta_from_x(chart_x(z, c_abs));
    const double p = 2.0 * std::cos((2.0 * kPi - th) / 3.0);
    const double p_minus_1 = -4.0 * std::cos(th / 6.0) * std::sin((kPi - th) / 6.0);
    return core_from_p(p, 2.0 - p, p_minus_1, b, u_const(b, c_abs));
}

inline FamilyCore core_u3_chart2(double z, double c_abs, double b) {
    const double th = theta_from_x(chart_x(z, c_abs));
    const double p = 2.0 * std::cos((2.0 * kPi + th) / 3.0);
    return core_from_p(p, 2.0 - p, p - 1.0, b, u_const(b, c_abs));
}

inline FamilyCore core_u3_chart1(double z, double c_abs, double b) {
    const double x = c_abs * std::exp(-1.5 * z);
    if (!(x >= 2.0)) {
        if (x < 2.0 * (1.0 - 1e-12)) throw OutOfDomain("z above the single-root chart");
    }
    const double eta = acosh1p(std::fmax(x - 2.0, 0.0));
    const double p = -2.0 * std::cosh(eta / 3.0);
    return core_from_p(p, 2.0 - p, p - 1.0, b, u_const(b, c_abs));
}

inline FamilyCore family_core(const SolutionFamily& fam, double z, const ModelParams& params) {
    const double b = params.b;
    switch (fam.tag) {
        case FamilyTag::TrivialLinear: {
            return FamilyCore{};
        }
        case FamilyTag::LogPlus: {
            require_b(b);
            FamilyCore f;
            f.v_core = 3.0 / b * z;
            f.v_z = 3.0 / b;
            return f;
        }
        case FamilyTag::LogMinus: {
            require_b(b);
            FamilyCore f;
            f.v_core = -z / b;
            f.v_z = -1.0 / b;
            return f;
        }
        case FamilyTag::R:
            require_b(b);
            return core_r(z, fam.c, b);
        case FamilyTag::U1:
        case FamilyTag::U2:
        case FamilyTag::U3Chart2: {
            require_b(b);
            const double zs = z_star(fam.c_abs());
            if (z < zs)
                throw OutOfDomain("z below z* = -(2/3) log(2/|c|) = " + fmt(zs));
            if (fam.tag == FamilyTag::U1) return core_u1(z, fam.c_abs(), b);
            if (fam.tag == FamilyTag::U2) return core_u2(z, fam.c_abs(), b);
            return core_u3_chart2(z, fam.c_abs(), b);
        }
        case FamilyTag::U3Chart1: {
            require_b(b);
            if (z >= z_star(fam.c_abs()))
                throw OutOfDomain("chart 1 requires z < z* = " + fmt(z_star(fam.c_abs())));
            return core_u3_chart1(z, fam.c_abs(), b);
        }
        case FamilyTag::U3: {
            require_b(b);
            if (z >= z_star(fam.c_abs())) return core_u3_chart2(z, fam.c_abs(), b);
            return core_u3_chart1(z, fam.c_abs(), b);
        }
    }
    throw Unsupported("unknown family");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public evaluators

/// v(z) including the linear-term constant d.
inline double eval_v(const SolutionFamily& fam, double z, const ModelParams& params) {
    return detail::family_core(fam, z, params).v_core + fam.d;
}

inline double eval_vz(const SolutionFamily& fam, double z, const ModelParams& params) {
    return detail::family_core(fam, z, params).v_z;
}

/// (v, v_z, v_zz) in the invariant coordinate, plus the uniformizing root
/// when the family has one.
struct VJet {
    double v = 0.0;
    double v_z = 0.0;
    double v_zz = 0.0;
    std::optional<double> p;
};

inline VJet eval_vjet(const SolutionFamily& fam, double z, const ModelParams& params) {
    const auto f = detail::family_core(fam, z, params);
    VJet j;
    j.v = f.v_core + fam.d;
    j.v_z = f.v_z;
    j.v_zz = f.v_zz;
    if (f.has_p) j.p = f.p;
    return j;
}

/// u(S,t) = S v(z) + d S + d2.
inline double eval_u(const SolutionFamily& fam, double S, double t, const ModelParams& params) {
    const double z = to_invariant(S, t, params);
    return S * (detail::family_core(fam, z, params).v_core + fam.d) + fam.d2;
}

/// Delta = du/dS = v(z) + v_z(z) + d.
inline double eval_delta(const SolutionFamily& fam, double S, double t, const ModelParams& params) {
    const double z = to_invariant(S, t, params);
    const auto f = detail::family_core(fam, z, params);
    return f.v_core + f.v_z + fam.d;
}

/// Full analytic 2-jet; the input for the model-catalogue residual gates.
inline Jet2 eval_jet(const SolutionFamily& fam, double S, double t, const ModelParams& params) {
    const double z = to_invariant(S, t, params);
    const auto f = detail::family_core(fam, z, params);
    Jet2 j;
    j.S = S;
    j.t = t;
    j.u = S * (f.v_core + fam.d) + fam.d2;
    j.u_t = -params.sigma * params.sigma / 8.0 * S * f.v_z;
    j.u_S = f.v_core + f.v_z + fam.d;
    j.u_SS = (f.v_z + f.v_zz) / S;
    if (!detail::finite(j.u_SS))
        throw OutOfDomain("second derivative singular at the family boundary");
    return j;
}

/// S-interval on which the family is defined at time t.
struct SInterval {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool lo_closed = false;
    bool hi_closed = false;
    bool contains(double S) const {
        if (!(S > 0.0)) return false;
        if (S < lo || (S == lo && !lo_closed)) return false;
        if (S > hi || (S == hi && !hi_closed)) return false;
        return true;
    }
};

inline SInterval domain_of(const SolutionFamily& fam, const ModelParams& params, double t) {
    SInterval d;
    switch (fam.tag) {
        case FamilyTag::U1:
        case FamilyTag::U2:
        case FamilyTag::U3Chart2:
            d.lo = domain_boundary_s(fam.c_abs(), t, params);
            d.lo_closed = true;
            return d;
        case FamilyTag::U3Chart1:
            d.hi = domain_boundary_s(fam.c_abs(), t, params);
            d.hi_closed = false;
            return d;
        default:
            return d;  // (0, inf)
    }
}

/// (S, t) with the cached invariant coordinate and optional uniformizing root.
struct InvariantPoint {
    double S = 0.0;
    double t = 0.0;
    double z = 0.0;
    std::optional<double> p;

    static InvariantPoint make(double S, double t, const ModelParams& params) {
        InvariantPoint pt;
        pt.S = S;
        pt.t = t;
        pt.z = to_invariant(S, t, params);
        return pt;
    }

    InvariantPoint with_root(const SolutionFamily& fam, const ModelParams& params) const {
        InvariantPoint pt = *this;
        const auto core = detail::family_core(fam, z, params);
        if (core.has_p) pt.p = core.p;
        return pt;
    }

    // Back-substitution residual of the cached root in the branch cubic.
    double root_residual(double c, Branch branch) const {
        if (!p) return 0.0;
        const double w = c * std::exp(-1.5 * z);
        const double pp = *p;
        if (branch == Branch::Plus) return (pp + 1.0) * (pp + 1.0) * (pp - 2.0) - 2.0 * w;
        return (pp - 1.0) * (pp - 1.0) * (pp + 2.0) - 2.0 * w;
    }
};

// ---------------------------------------------------------------------------
// Symmetry group actions

/// Coefficients of one group generator and the group parameter.
struct SymmetryAction {
    double a1 = 0.0;
    double a2 = 0.0;
    double a3 = 0.0;
    double a4 = 0.0;
    double epsilon = 0.0;
    int k = 0;
};

enum class ActionForm { Auto, GeneralLambda, PowerLambda };

using JetFn = std::function<Jet2(double S, double t)>;

/// Wraps a jet evaluator in the group action; the result solves the same
/// equation. The general-lambda form is the a1 -> 0 limit of the power form.
inline JetFn apply_symmetry(JetFn base, const SymmetryAction& act, ActionForm form = ActionForm::Auto) {
    if (act.k != 0) throw Unsupported("only the k = 0 actions apply to this equation");
    if (form == ActionForm::Auto)
        form = act.a1 == 0.0 ? ActionForm::GeneralLambda : ActionForm::PowerLambda;
    if (form == ActionForm::PowerLambda && act.a1 == 0.0)
        throw SingularAction("a1 = 0: use the general-lambda (a1 -> 0 limit) form");
    if (form == ActionForm::GeneralLambda && act.a1 != 0.0)
        throw InvalidParameter("the general-lambda action has no a1 generator");

    const double eps = act.epsilon;
    if (form == ActionForm::GeneralLambda) {
        return [base = std::move(base), act, eps](double S, double t) {
            Jet2 j = base(S, t - act.a2 * eps);
            j.S = S;
            j.t = t;
            j.u += act.a3 * S * eps + act.a4 * eps;
            j.u_S += act.a3 * eps;
            return j;
        };
    }
    const double ea = std::exp(act.a1 * eps);
    return [base = std::move(base), act, eps, ea](double S, double t) {
        Jet2 j = base(S / ea, t - act.a2 * eps);
        j.S = S;
        j.t = t;
        j.u = ea * j.u + act.a3 * S * eps + act.a4 / act.a1 * (ea - 1.0);
        j.u_t *= ea;
        j.u_S += act.a3 * eps;
        j.u_SS /= ea;
        return j;
    };
}

inline JetFn family_jet_fn(const SolutionFamily& fam, const ModelParams& params) {
    return [fam, params](double S, double t) { return eval_jet(fam, S, t, params); };
}

// ---------------------------------------------------------------------------
// Asymptotic expansions for S -> infinity (U3 chart 1: S -> 0)

/// Linear-in-S coefficient of the U2 / U3-chart-2 large-S behavior,
/// (1/b)(1 + (2/3) log(2^7/(3^3 |c|))). Also the large-S limit of Delta at
/// d = 0; note it depends on |c|.
inline double leading_linear_coefficient(const SolutionFamily& fam, const ModelParams& params) {
    detail::require_b(params.b);
    if (fam.tag != FamilyTag::U2 && fam.tag != FamilyTag::U3Chart2 && fam.tag != FamilyTag::U3)
        throw Unsupported("linear leading term only for u2/u3 at large S");
    return (1.0 + 2.0 / 3.0 * std::log(128.0 / (27.0 * fam.c_abs()))) / params.b;
}

/// Partial sum of the large-S expansion through the requested order
/// (0 = leading term). The d*S + d2 part is always included. The U1 linear
/// coefficient uses the sign consistent with the closed form; the published
/// one differs (see the conformance report).
inline double eval_asymptotic(const SolutionFamily& fam, double S, double t,
                              const ModelParams& params, int order) {
    if (!(S > 0.0)) throw NonPositivePrice("eval_asymptotic requires S > 0");
    if (order < 0) throw InvalidParameter("order must be >= 0");
    const double b = params.b;
    detail::require_b(b);
    const double s2t = params.sigma * params.sigma * t;
    const double ca = fam.c_abs();
    const double shift = fam.d * S + fam.d2;
    switch (fam.tag) {
        case FamilyTag::R: {
            double s = 3.0 / b * S * std::log(S);
            if (order >= 1)
                s += (2.0 * std::log(9.0 / (2.0 * fam.c)) - 2.0 - 3.0 / 8.0 * s2t) / b * S;
            if (order >= 2)
                s -= 16.0 / (27.0 * b) * fam.c * std::exp(3.0 * s2t / 16.0) / std::sqrt(S);
            if (order >= 3) throw Unsupported("no further terms");
            return s + shift;
        }
        case FamilyTag::U1: {
            double s = 3.0 / b * S * std::log(S);
            if (order >= 1)
                s += (4.0 * std::log(3.0) - 2.0 + 8.0 / 3.0 * std::log(2.0 / ca) -
                      3.0 / 8.0 * s2t) / b * S;
            if (order >= 2)
                s += 16.0 / (27.0 * b) * ca * std::exp(3.0 * s2t / 16.0) / std::sqrt(S);
            if (order >= 3) throw Unsupported("no further terms");
            return s + shift;
        }
        case FamilyTag::U2:
        case FamilyTag::U3Chart2: {
            const double sign = fam.tag == FamilyTag::U2 ? 1.0 : -1.0;
            double s = leading_linear_coefficient(fam, params) * S;
            if (order >= 1)
                s += sign * 8.0 / (3.0 * b) * std::sqrt(2.0 * ca / 3.0) *
                     std::exp(3.0 * s2t / 32.0) * std::pow(S, 0.25);
            if (order >= 2)
                s -= 8.0 / (27.0 * b) * ca * std::exp(3.0 * s2t / 16.0) / std::sqrt(S);
            if (order >= 3) throw Unsupported("no further terms");
            return s + shift;
        }
        case FamilyTag::U3Chart1: {
            // Printed leading behavior near S -> 0; deviates from the closed
            // form (conformance report).
            if (order >= 1) throw Unsupported("no further printed terms");
            return -14.0 / b * S * std::log(S) + shift;
        }
        default:
            throw Unsupported("no stated expansion for this family");
    }
}

}  // namespace nlbs
