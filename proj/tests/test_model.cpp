#include <catch_amalgamated.hpp>

#include <random>

#include "nlbs/model.hpp"

using namespace nlbs;
using Catch::Approx;

namespace {

Jet2 jet(double S, double t, double u, double u_t, double u_S, double u_SS) {
    return Jet2{S, t, u, u_t, u_S, u_SS};
}

ModelKind reaction_exp() {
    return ModelKind::reaction([](double a) { return std::exp(a); },
                               [](double a) { return std::exp(a); });
}

ModelKind reaction_recip() {
    return ModelKind::reaction([](double a) { return 1.0 / (1.0 - a); },
                               [](double a) { return 1.0 / ((1.0 - a) * (1.0 - a)); });
}

}  // namespace

TEST_CASE("adjusted volatility factor: catalogue values", "[model]") {
    const auto j = jet(2.0, 0.0, 1.0, 0.3, 0.2, 0.1);

    // rho = 0 gives the linear equation for every kind
    const auto p0 = ModelParams::make(0.4, 0.0);
    CHECK(adjusted_volatility_factor(ModelKind::frey(), p0, j) == Approx(1.0));
    CHECK(adjusted_volatility_factor(ModelKind::cjp(), p0, j) == Approx(1.0));
    CHECK(adjusted_volatility_factor(ModelKind::sircar(), p0, j) == Approx(1.0));
    CHECK(adjusted_volatility_factor(reaction_exp(), p0, j) == Approx(1.0));

    const auto p1 = ModelParams::make(0.4, 1.0);
    CHECK(adjusted_volatility_factor(ModelKind::cjp(), p1, jet(1.0, 0.0, 0.0, 0.0, 0.0, 1.0)) ==
          Approx(3.0));
    // 1/(1 - 0.2)^2
    CHECK(adjusted_volatility_factor(ModelKind::frey(), p1, j) == Approx(1.5625).epsilon(1e-14));
}

TEST_CASE("pde residual vanishes on linear and constant candidates", "[model]") {
    const auto params = ModelParams::make(0.3, 0.7, 2.0);
    const ModelKind kinds[] = {ModelKind::cjp(), ModelKind::frey(), ModelKind::sircar(),
                               reaction_exp()};
    for (const auto& kind : kinds) {
        CHECK(pde_residual(kind, params, jet(1.7, 0.2, 3.4, 0.0, 2.0, 0.0)) == 0.0);
        CHECK(pde_residual(kind, params, jet(0.5, 0.9, 4.0, 0.0, 0.0, 0.0)) == 0.0);
    }
}

TEST_CASE("rho = 0 reduces every kind to the linear operator", "[model]") {
    const auto params = ModelParams::make(0.4, 0.0);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const ModelKind kinds[] = {ModelKind::cjp(), ModelKind::frey(), ModelKind::sircar(),
                               reaction_exp(), reaction_recip()};
    for (int i = 0; i < 200; ++i) {
        const auto j = jet(0.1 + 5.0 * std::fabs(U(rng)), U(rng), U(rng), U(rng), U(rng), U(rng));
        const double linear = j.u_t + 0.5 * 0.16 * j.S * j.S * j.u_SS;
        for (const auto& kind : kinds)
            CHECK(pde_residual(kind, params, j) == Approx(linear).margin(1e-14));
    }
}

TEST_CASE("degenerate denominator raises", "[model]") {
    const auto params = ModelParams::make(0.4, 1.0);
    // rho S u_SS = 1 exactly
    const auto j = jet(2.0, 0.0, 1.0, 0.0, 0.0, 0.5);
    CHECK_THROWS_AS(adjusted_volatility_factor(ModelKind::frey(), params, j),
                    DegenerateDenominator);
    // 1 - rho u_S - rho S u_SS = 0
    const auto js = jet(2.0, 0.0, 1.0, 0.0, 0.5, 0.25);
    CHECK_THROWS_AS(adjusted_volatility_factor(ModelKind::sircar(), params, js),
                    DegenerateDenominator);
}

TEST_CASE("linearize maps the second-order kinds to the quadratic-cost equation", "[model]") {
    CHECK(linearize(ModelKind::frey()).tag == ModelTag::CJP);
    CHECK(linearize(ModelKind::sircar()).tag == ModelTag::CJP);
    CHECK_THROWS_AS(linearize(ModelKind::cjp()), Unsupported);
    CHECK_THROWS_AS(linearize(reaction_exp()), Unsupported);
}

TEST_CASE("linearization error is quadratic in rho", "[model]") {
    const auto j = jet(1.3, 0.1, 0.7, 0.05, 0.4, 0.7);
    const auto gap = [&](const ModelKind& kind, double rho) {
        const auto p = ModelParams::make(0.4, rho);
        return std::fabs(pde_residual(kind, p, j) - pde_residual(ModelKind::cjp(), p, j));
    };
    for (const ModelKind& kind : {ModelKind::frey(), ModelKind::sircar()}) {
        for (double rho : {0.1, 0.05}) {
            const double ratio = gap(kind, rho) / gap(kind, rho / 2.0);
            CHECK(ratio > 3.5);
            CHECK(ratio < 4.5);
        }
    }
}

TEST_CASE("reaction kinds recover the named equations", "[model]") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-0.4, 0.4);
    const auto params = ModelParams::make(0.4, 0.6);
    for (int i = 0; i < 100; ++i) {
        const auto j = jet(0.2 + 3.0 * std::fabs(U(rng)), U(rng), U(rng), U(rng), U(rng), U(rng));
        CHECK(pde_residual(reaction_exp(), params, j) ==
              Approx(pde_residual(ModelKind::frey(), params, j)).margin(1e-12));
        CHECK(pde_residual(reaction_recip(), params, j) ==
              Approx(pde_residual(ModelKind::sircar(), params, j)).margin(1e-12));
    }
}

TEST_CASE("reaction derivative diagnostic", "[model]") {
    CHECK(reaction_derivative_gap(reaction_exp(), 0.3) < 1e-9);
    const auto bad = ModelKind::reaction([](double a) { return std::exp(a); },
                                         [](double) { return 1.0; });
    CHECK(reaction_derivative_gap(bad, 0.5) > 0.1);
}

TEST_CASE("volatility factor derivatives match finite differences", "[model]") {
    const ModelKind kinds[] = {ModelKind::cjp(), ModelKind::frey(), ModelKind::sircar(),
                               reaction_recip()};
    const double h = 1e-7;
    for (const auto& kind : kinds) {
        for (double a : {-0.3, 0.0, 0.2}) {
            for (double m : {-0.5, 0.1, 0.6}) {
                const auto f = adjusted_volatility(kind, a, m);
                const double fd_m = (adjusted_volatility(kind, a, m + h).v -
                                     adjusted_volatility(kind, a, m - h).v) / (2.0 * h);
                const double fd_a = (adjusted_volatility(kind, a + h, m).v -
                                     adjusted_volatility(kind, a - h, m).v) / (2.0 * h);
                CHECK(f.dv_dm == Approx(fd_m).margin(2e-5));
                CHECK(f.dv_da == Approx(fd_a).margin(2e-5));
            }
        }
    }
}

TEST_CASE("jet and parameter validation", "[model]") {
    CHECK_THROWS_AS(ModelParams::make(0.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(ModelParams::make(0.4, -0.1), InvalidParameter);
    const auto params = ModelParams::make(0.4, 1.0);
    CHECK_THROWS_AS(
        pde_residual(ModelKind::frey(), params, jet(-1.0, 0.0, 0.0, 0.0, 0.0, 0.0)),
        NonPositivePrice);
    CHECK_THROWS_AS(
        pde_residual(ModelKind::frey(), params,
                     jet(1.0, 0.0, std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0)),
        InvalidParameter);
    CHECK(ModelParams::make(0.4, 0.5, 2.0).b == Approx(1.0));
    const auto fe = ModelParams::make(0.4, 0.5, 2.0).frey_equivalent();
    CHECK(fe.rho == Approx(1.0));
    CHECK(fe.omega == Approx(1.0));
}
