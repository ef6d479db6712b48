#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace nlbs {

// Which square root is taken in the factored first-order equations, and
// correspondingly which of the two cubics parametrizes the solution sheet.
enum class Branch { Plus, Minus };

namespace detail {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// acosh(1 + u) for u >= 0 without cancellation near u = 0.
inline double acosh1p(double u) {
    return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

// theta = arccos(1 - X) for X in [0, 2], accurate at both endpoints.
inline double theta_from_x(double x) {
    if (x <= 1.0) return 2.0 * std::asin(std::sqrt(0.5 * x));
    return 2.0 * std::acos(std::sqrt(std::fmax(1.0 - 0.5 * x, 0.0)));
}

inline bool finite(double v) { return std::isfinite(v); }

// Shortest deterministic round-trip formatting used by all emitters.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Least-squares slope of log|y| against log|x|.
template <typename XS, typename YS>
double loglog_slope(const XS& xs, const YS& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(ys[i] > 0)) continue;
        const double lx = std::log(xs[i]);
        const double ly = std::log(ys[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++n;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail
}  // namespace nlbs
