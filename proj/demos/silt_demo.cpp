// Small tour of the library: regime, constants, one Monte Carlo sweep.

#include <cstdio>

#include "silt/silt.hpp"

int main() {
    using namespace silt;
    const HurstConfig cfg{0.6, 3};
    std::printf("H = %.2f, d = %d, regime %s\n", cfg.H, cfg.d, std::string(regime_name(classify_regime(cfg))).c_str());

    QuadSpec spec;
    spec.rel_tol = 1e-4;
    const QuadResult s2 = sigma_squared(cfg, spec);
    std::printf("sigma^2 = %.6g (+- %.2g)\n", s2.value, s2.error_estimate);

    MonteCarloConfig mc;
    mc.replicates = 500;
    mc.eps_list = {0.1, 0.05};
    mc.steps_per_unit = 128;
    const SiltSample S = run_silt(cfg, mc, {0.5, 1.0});
    for (std::size_t e = 0; e < S.eps_list.size(); ++e) {
        const double eps = S.eps_list[e];
        const Moments m = moments(S.values[e][1]);
        const auto r = rescale(S.values[e][1], eps, cfg, 1.0);
        std::printf("eps %.3g: mean I_1 = %.5g (exact %.5g), rescaled variance %.4g vs sigma^2 %.4g\n", eps, m.mean,
                    expected_silt(eps, 1.0, cfg), moments(r).variance, s2.value);
    }
    return 0;
}
