// Quick tour: evaluate an invariant solution, check it against the model
// catalogue pointwise, then benchmark the implicit solver against it.

#include <cstdio>

#include "nlbs/nlbs.hpp"

using namespace nlbs;

int main() {
    const auto params = ModelParams::make(0.4, 1.0);
    const auto fam = SolutionFamily::u3_chart2(0.5);

    std::printf("u3 chart-2 family, sigma = 0.4, |c| = 0.5, b = 1\n");
    std::printf("%8s %14s %14s %14s\n", "S", "u", "delta", "residual");
    for (double S = 0.5; S <= 4.0; S += 0.5) {
        const auto jet = eval_jet(fam, S, 0.25, params);
        const double res = pde_residual(ModelKind::frey(), params, jet);
        std::printf("%8.2f %14.8f %14.8f %14.3e\n", S,
                    eval_u(fam, S, 0.25, params), eval_delta(fam, S, 0.25, params), res);
    }

    const auto ref = [&](double S, double t) { return eval_u(fam, S, t, params); };
    const auto table = convergence_study(ModelKind::frey(), params, ref,
                                         {{101, 13}, {201, 25}, {401, 50}},
                                         std::log(0.45), std::log(5.0), 0.5);
    std::printf("\nterminal-value march vs the closed form (T = 0.5):\n");
    std::printf("%6s %6s %12s %8s\n", "nx", "nt", "err_max", "order");
    for (const auto& l : table.levels)
        std::printf("%6d %6d %12.3e %8.3f\n", l.nx, l.nt, l.err_max, l.order);
    return 0;
}
