#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "nlbs/detail/numerics.hpp"
#include "nlbs/errors.hpp"

namespace nlbs {

// |denominator| below this is treated as a modeling boundary, not a number.
inline constexpr double kDenominatorGuard = 1e-10;

/// Market/model parameters shared by the whole catalogue.
/// b = omega*rho is the combination the invariant solutions depend on.
struct ModelParams {
    double sigma = 0.0;
    double rho = 0.0;
    double omega = 1.0;
    int k = 0;
    double b = 0.0;

    static ModelParams make(double sigma, double rho, double omega = 1.0, int k = 0) {
        if (!(sigma > 0.0)) throw InvalidParameter("sigma must be > 0");
        if (!(rho >= 0.0)) throw InvalidParameter("rho must be >= 0");
        if (!(omega > 0.0)) throw InvalidParameter("omega must be > 0");
        if (k != 0 && k != 1) throw InvalidParameter("k must be 0 or 1");
        ModelParams p;
        p.sigma = sigma;
        p.rho = rho;
        p.omega = omega;
        p.k = k;
        p.b = omega * rho;
        return p;
    }

    // Same equation with the price-impact scale folded into rho, so that the
    // invariant families (built on b) solve the plain reduced-form model.
    ModelParams frey_equivalent() const { return make(sigma, b, 1.0, k); }
};

enum class ModelTag { CJP, FreySDE, ReactionGeneral, Sircar };

/// One equation of the catalogue. ReactionGeneral carries the reaction
/// function g and its derivative g_alpha, both evaluated at rho*u_S.
struct ModelKind {
    ModelTag tag = ModelTag::FreySDE;
    std::function<double(double)> g;
    std::function<double(double)> g_alpha;

    static ModelKind cjp() { return {ModelTag::CJP, {}, {}}; }
    static ModelKind frey() { return {ModelTag::FreySDE, {}, {}}; }
    static ModelKind sircar() { return {ModelTag::Sircar, {}, {}}; }
    static ModelKind reaction(std::function<double(double)> g,
                              std::function<double(double)> g_alpha) {
        if (!g || !g_alpha) throw InvalidParameter("reaction kind needs g and g_alpha");
        return {ModelTag::ReactionGeneral, std::move(g), std::move(g_alpha)};
    }

    const char* name() const {
        switch (tag) {
            case ModelTag::CJP: return "cjp";
            case ModelTag::FreySDE: return "frey";
            case ModelTag::ReactionGeneral: return "reaction";
            case ModelTag::Sircar: return "sircar";
        }
        return "?";
    }
};

/// 2-jet of a candidate solution at one point. This module never
/// differentiates; jets are caller-supplied.
struct Jet2 {
    double S = 0.0;
    double t = 0.0;
    double u = 0.0;
    double u_t = 0.0;
    double u_S = 0.0;
    double u_SS = 0.0;
};

inline void validate_jet(const Jet2& j) {
    if (!(j.S > 0.0)) throw NonPositivePrice("jet requires S > 0");
    if (!detail::finite(j.t) || !detail::finite(j.u) || !detail::finite(j.u_t) ||
        !detail::finite(j.u_S) || !detail::finite(j.u_SS))
        throw InvalidParameter("jet entries must be finite");
}

/// Volatility factor v and its partials with respect to a = rho*u_S and
/// m = rho*S*u_SS. The derivatives feed the solver's Newton Jacobian.
struct VolFactor {
    double v = 1.0;
    double dv_da = 0.0;
    double dv_dm = 0.0;
};

/// v(S, rho u_S, rho u_SS) such that the equation reads
/// u_t + (sigma^2/2) * v * S^2 * u_SS = 0.
inline VolFactor adjusted_volatility(const ModelKind& kind, double a, double m,
                                     double guard = kDenominatorGuard) {
    VolFactor f;
    switch (kind.tag) {
        case ModelTag::CJP:
            f.v = 1.0 + 2.0 * m;
            f.dv_dm = 2.0;
            return f;
        case ModelTag::FreySDE: {
            const double den = 1.0 - m;
            if (std::fabs(den) < guard)
                throw DegenerateDenominator("1 - rho*S*u_SS inside guard band");
            f.v = 1.0 / (den * den);
            f.dv_dm = 2.0 / (den * den * den);
            return f;
        }
        case ModelTag::Sircar: {
            const double num = 1.0 - a;
            const double den = 1.0 - a - m;
            if (std::fabs(den) < guard)
                throw DegenerateDenominator("1 - rho*u_S - rho*S*u_SS inside guard band");
            const double den3 = den * den * den;
            f.v = num * num / (den * den);
            f.dv_da = 2.0 * num * m / den3;
            f.dv_dm = 2.0 * num * num / den3;
            return f;
        }
        case ModelTag::ReactionGeneral: {
            const double gv = kind.g(a);
            if (!(gv > 0.0)) throw InvalidParameter("reaction g(alpha) must be > 0");
            const double r = kind.g_alpha(a) / gv;
            const double den = 1.0 - r * m;
            if (std::fabs(den) < guard)
                throw DegenerateDenominator("1 - rho*(g_a/g)*S*u_SS inside guard band");
            f.v = 1.0 / (den * den);
            f.dv_dm = 2.0 * r / (den * den * den);
            // g_alpha_alpha is not part of the interface; the a-derivative of
            // the ratio is taken by central difference.
            const double h = 1e-6 * std::fmax(1.0, std::fabs(a));
            const double gp = kind.g(a + h), gm = kind.g(a - h);
            if (!(gp > 0.0) || !(gm > 0.0))
                throw InvalidParameter("reaction g(alpha) must be > 0");
            const double rp = kind.g_alpha(a + h) / gp;
            const double rm = kind.g_alpha(a - h) / gm;
            const double dr = (rp - rm) / (2.0 * h);
            f.dv_da = 2.0 * dr * m / (den * den * den);
            return f;
        }
    }
    throw Unsupported("unknown model kind");
}

inline double adjusted_volatility_factor(const ModelKind& kind, const ModelParams& params,
                                         const Jet2& jet, double guard = kDenominatorGuard) {
    validate_jet(jet);
    const double a = params.rho * jet.u_S;
    const double m = params.rho * jet.S * jet.u_SS;
    return adjusted_volatility(kind, a, m, guard).v;
}

/// u_t + (sigma^2/2) v S^2 u_SS; zero on exact solutions.
inline double pde_residual(const ModelKind& kind, const ModelParams& params, const Jet2& jet,
                           double guard = kDenominatorGuard) {
    const double v = adjusted_volatility_factor(kind, params, jet, guard);
    return jet.u_t + 0.5 * params.sigma * params.sigma * v * jet.S * jet.S * jet.u_SS;
}

/// First-order Taylor replacement of the nonlinearity around rho = 0.
inline ModelKind linearize(const ModelKind& kind) {
    if (kind.tag == ModelTag::FreySDE || kind.tag == ModelTag::Sircar) return ModelKind::cjp();
    throw Unsupported("no stated linearization for this kind");
}

/// Diagnostic: central-difference check of the supplied g_alpha.
inline double reaction_derivative_gap(const ModelKind& kind, double alpha, double h = 1e-6) {
    if (kind.tag != ModelTag::ReactionGeneral) throw Unsupported("needs a reaction kind");
    const double fd = (kind.g(alpha + h) - kind.g(alpha - h)) / (2.0 * h);
    return std::fabs(fd - kind.g_alpha(alpha));
}

}  // namespace nlbs
