#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nlbs/detail/numerics.hpp"
#include "nlbs/errors.hpp"

// General-q reduction machinery: the reduced ODE on v(z), its polynomial
// form in y = v_z, the factored first-order branches, singular lines, and
// numeric integration with uniformized quadrature as cross-check.

namespace nlbs {

struct ReductionParams {
    double q = 0.0;
    double a = 0.0;   // similarity speed; q = sigma^2/(2a)
    double b = 0.0;
    int xi = 1;       // (-1)^k

    static ReductionParams from_sigma(double sigma, double a, double b, int k = 0) {
        if (!(sigma > 0.0)) throw InvalidParameter("sigma must be > 0");
        if (a == 0.0) throw InvalidParameter("a must be nonzero");
        return checked({sigma * sigma / (2.0 * a), a, b, k % 2 == 0 ? 1 : -1});
    }
    static ReductionParams from_q(double q, double b, int xi) {
        return checked({q, std::numeric_limits<double>::quiet_NaN(), b, xi});
    }

    double branch_line() const { return q / (4.0 * b); }
    bool exceptional() const { return std::fabs(q + 4.0 * xi) <= 1e-12 * std::fmax(1.0, std::fabs(q)); }

  private:
    static ReductionParams checked(ReductionParams p) {
        if (p.b == 0.0) throw InvalidParameter("b must be nonzero");
        if (p.xi != 1 && p.xi != -1) throw InvalidParameter("xi must be +1 or -1");
        if (p.q == 0.0) throw InvalidParameter("q must be nonzero");
        return p;
    }
};

/// Residual of v_z + q (v_zz + xi v_z) / (1 - b (v_zz + xi v_z))^2 = 0.
/// (The value v itself does not enter the reduced equation.)
inline double reduced_residual(double v_z, double v_zz, const ReductionParams& params,
                               double guard = 1e-10) {
    const double m = v_zz + params.xi * v_z;
    const double den = 1.0 - params.b * m;
    if (std::fabs(den) < guard) throw DegenerateDenominator("1 - b(v_zz + xi v_z) inside guard band");
    return v_z + params.q * m / (den * den);
}

/// F(y, y_z): the reduced ODE multiplied through by the squared denominator.
inline double polynomial_form_residual(double y, double y_z, const ReductionParams& params) {
    const double b = params.b, q = params.q;
    const double xi = params.xi;
    const double quad = y * y - xi / b * y + xi * q / (2.0 * b * b);
    const double cub = y * y - 2.0 * xi / b * y + (1.0 + xi * q) / (b * b);
    return y * y_z * y_z + 2.0 * xi * quad * y_z + cub * y;
}

/// dF/dy_z, whose zero set is the discriminant curve y = q/(4b).
inline double polynomial_form_dFdyz(double y, double y_z, const ReductionParams& params) {
    const double b = params.b, q = params.q;
    const double xi = params.xi;
    return 2.0 * y * y_z + 2.0 * xi * (y * y - xi / b * y + xi * q / (2.0 * b * b));
}

// ---------------------------------------------------------------------------
// Singular structure

enum class SingularKind { SimplePole, BranchPoint, SecondOrderPoleAtInfinity };

struct SingularLine {
    double y = 0.0;            // NaN encodes infinity
    SingularKind kind = SingularKind::SimplePole;
    std::string note;
};

/// The loci where the Lipschitz condition fails: y = 0, y = q/(4b), y = inf.
inline std::vector<SingularLine> singular_lines(const ReductionParams& params) {
    std::vector<SingularLine> out;
    out.push_back({0.0, SingularKind::SimplePole,
                   "w ~ -q/(b^2 y) on the principal sheet; zero of w on the second sheet"});
    out.push_back({params.branch_line(), SingularKind::BranchPoint,
                   "two y_z sheets glued with square-root contact"});
    out.push_back({std::numeric_limits<double>::quiet_NaN(),
                   SingularKind::SecondOrderPoleAtInfinity, "w ~ -xi/t^2 with t^2 = 1/y"});
    return out;
}

/// Value of the double y_z-root on the discriminant curve y = q/(4b).
/// (The published expansion prints 1 - xi q/4 for this constant; substituting
/// the curve into dF/dy_z = 0 gives 1 + xi q/4. The computed value is used.)
inline double branch_point_w(const ReductionParams& params) {
    return -(1.0 + params.xi * params.q / 4.0) / params.b;
}

struct ConstantSolutions {
    std::vector<double> values;      // real members of {0, (xi +- sqrt(q))/b}
    bool has_exceptional = false;    // exactly when q = -4 xi
    double exceptional = 0.0;        // -xi/b
};

inline ConstantSolutions constant_solutions(const ReductionParams& params) {
    ConstantSolutions cs;
    cs.values.push_back(0.0);
    if (params.q >= 0.0) {
        const double r = std::sqrt(params.q);
        cs.values.push_back((params.xi + r) / params.b);
        cs.values.push_back((params.xi - r) / params.b);
    }
    if (params.exceptional()) {
        cs.has_exceptional = true;
        cs.exceptional = -params.xi / params.b;
    }
    return cs;
}

// ---------------------------------------------------------------------------
// Factored first-order branches

/// Right-hand side of y_z = f(y) for the chosen square-root branch.
inline double rhs_f(double y, const ReductionParams& params, Branch branch) {
    if (y == 0.0) throw SingularY("y = 0 is a singular line");
    const double b = params.b, q = params.q;
    const double xi = params.xi;
    double rad = q / (b * b * b) * (params.branch_line() - y);
    if (rad < 0.0) {
        const double scale =
            std::fabs(q / (b * b * b)) * (std::fabs(params.branch_line()) + std::fabs(y) + 1.0);
        if (rad < -1e-13 * scale) throw NegativeRadicand("outside the branch region");
        rad = 0.0;
    }
    const double root = std::sqrt(rad);
    const double base = -xi * y * y + y / b - q / (2.0 * b * b);
    return (base + (branch == Branch::Plus ? root : -root)) / y;
}

struct IntegrationControls {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double margin = 1e-6;       // stop distance from the singular lines
    double max_step = std::numeric_limits<double>::infinity();
    int max_steps = 200000;
};

struct YTrajectory {
    std::vector<double> z;
    std::vector<double> y;
    Branch branch = Branch::Minus;
    bool boundary_event = false;
    double event_line = 0.0;    // which singular line was approached

    double back() const { return y.back(); }
};

namespace detail {

// Dormand-Prince 5(4) pair.
inline bool dopri_step(double& z, double& y, double& h, double f1, const ReductionParams& params,
                       Branch branch, const IntegrationControls& ctl, double& f_next) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const auto f = [&](double yy) { return rhs_f(yy, params, branch); };
    try {
        const double k1 = f1;
        const double k2 = f(y + h * a21 * k1);
        const double k3 = f(y + h * (a31 * k1 + a32 * k2));
        const double k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const double k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const double k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const double y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double k7 = f(y5);
        const double err = std::fabs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
        const double tol = ctl.abs_tol + ctl.rel_tol * std::fmax(std::fabs(y), std::fabs(y5));
        if (err <= tol) {
            z += h;
            y = y5;
            f_next = k7;
            const double grow = err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
            h *= std::fmin(5.0, std::fmax(0.2, grow));
            return true;
        }
        h *= std::fmax(0.1, 0.9 * std::pow(tol / err, 0.2));
        return false;
    } catch (const NegativeRadicand&) {
        h *= 0.5;
        return false;
    } catch (const SingularY&) {
        h *= 0.5;
        return false;
    }
}

}  // namespace detail

/// Adaptive integration of y_z = f(y) from (z0, y0) toward z1. Terminates
/// with a boundary event when the trajectory comes within `margin` of
/// y = 0 or y = q/(4b); continuation across those lines is not unique.
inline YTrajectory integrate_y(double y0, double z0, double z1, const ReductionParams& params,
                               Branch branch, IntegrationControls ctl = {}) {
    const double lines[2] = {0.0, params.branch_line()};
    for (double L : lines)
        if (std::fabs(y0 - L) <= ctl.margin)
            throw SingularEncounter("y0 within margin of singular line y = " + detail::fmt(L));

    YTrajectory tr;
    tr.branch = branch;
    tr.z.push_back(z0);
    tr.y.push_back(y0);

    double z = z0, y = y0;
    double f1 = rhs_f(y, params, branch);  // throws NegativeRadicand if y0 invalid
    const double dir = z1 >= z0 ? 1.0 : -1.0;
    double h = dir * std::fmin(ctl.max_step, std::fmax(1e-8, 1e-3 * std::fabs(z1 - z0)));

    for (int step = 0; step < ctl.max_steps; ++step) {
        if (dir * (z - z1) >= 0.0) return tr;
        if (std::fabs(h) > ctl.max_step) h = dir * ctl.max_step;
        if (dir * (z + h - z1) > 0.0) h = z1 - z;
        const double z_before = z, y_before = y;
        double f_next = f1;
        if (!detail::dopri_step(z, y, h, f1, params, branch, ctl, f_next)) {
            if (std::fabs(h) < 1e-15 * std::fmax(1.0, std::fabs(z))) {
                tr.boundary_event = true;
                double best = lines[0];
                if (std::fabs(y - lines[1]) < std::fabs(y - lines[0])) best = lines[1];
                tr.event_line = best;
                return tr;
            }
            continue;
        }
        f1 = f_next;
        // boundary event: crossed into the margin band of a singular line
        for (double L : lines) {
            if (std::fabs(y - L) <= ctl.margin ||
                (y_before - L) * (y - L) < 0.0) {
                // bisect back to the margin surface
                double lo = 0.0, hi = 1.0;
                for (int i = 0; i < 60; ++i) {
                    const double mid = 0.5 * (lo + hi);
                    const double ym = y_before + mid * (y - y_before);
                    if (std::fabs(ym - L) <= ctl.margin) hi = mid; else lo = mid;
                }
                tr.boundary_event = true;
                tr.event_line = L;
                tr.z.push_back(z_before + hi * (z - z_before));
                tr.y.push_back(y_before + hi * (y - y_before));
                return tr;
            }
        }
        tr.z.push_back(z);
        tr.y.push_back(y);
    }
    throw SingularEncounter("integration exceeded max_steps near z = " + detail::fmt(z));
}

// ---------------------------------------------------------------------------
// Uniformized quadrature

namespace detail {

// dz/dp on the chosen sheet. Minus carries the direct parametrization of the
// curve; Plus is its (p, c) -> (-p, -c) mirror.
inline double dz_dp(double p, const ReductionParams& params, Branch branch) {
    const double q = params.q;
    const double xi = params.xi;
    const double s = branch == Branch::Minus ? 1.0 : -1.0;
    const double ps = p + s, pm = p - s;
    return -2.0 * q * xi * p * ps / (pm * (q * ps * ps + 4.0 * xi));
}

inline std::vector<double> quadrature_poles(const ReductionParams& params, Branch branch) {
    const double s = branch == Branch::Minus ? 1.0 : -1.0;
    std::vector<double> poles = {s};
    const double rr = -4.0 * params.xi / params.q;
    if (rr >= 0.0) {
        const double r = std::sqrt(rr);
        poles.push_back(-s + r);
        poles.push_back(-s - r);
    }
    return poles;
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0) throw PoleOnPath("quadrature failed to converge (near-pole integrand)");
    if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// z(p1) - z(p0) along one sheet. For q = -4 this reproduces the
/// log-differences implied by the branch cubics.
inline double uniformized_quadrature(double p0, double p1, const ReductionParams& params,
                                     Branch branch, double tol = 1e-12) {
    if (p0 == p1) return 0.0;
    const double lo = std::fmin(p0, p1), hi = std::fmax(p0, p1);
    for (double pole : detail::quadrature_poles(params, branch)) {
        if (pole >= lo - 1e-9 && pole <= hi + 1e-9)
            throw PoleOnPath("integrand pole at p = " + detail::fmt(pole) + " on [p0, p1]");
    }
    const auto f = [&](double p) { return detail::dz_dp(p, params, branch); };
    const double fa = f(p0), fb = f(p1), fm = f(0.5 * (p0 + p1));
    const double whole = (p1 - p0) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson(f, p0, p1, fa, fm, fb, whole, tol, 60);
}

/// Nonnegative uniformizing root from the slope: p = sqrt(1 - (4b/q) v_z).
inline double p_from_vz(double v_z, const ReductionParams& params) {
    double rad = 1.0 - 4.0 * params.b / params.q * v_z;
    if (rad < 0.0) {
        if (rad < -1e-12) throw NegativeRadicand("v_z outside the uniformizable range");
        rad = 0.0;
    }
    return std::sqrt(rad);
}

/// zeta(p) = q(1 - p^2)/(4b); right inverse of p_from_vz on p >= 0.
inline double vz_from_p(double p, const ReductionParams& params) {
    return params.q * (1.0 - p * p) / (4.0 * params.b);
}

}  // namespace nlbs
