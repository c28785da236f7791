#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "silt/chaos_mc.hpp"
#include "silt/constants.hpp"
#include "silt/stats.hpp"

using namespace silt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Hermite polynomials", "[chaos_mc]") {
    CHECK(hermite(0, 3.7) == 1.0);
    CHECK(hermite(2, 0.0) == -1.0);
    CHECK(hermite(2, 2.0) == 3.0);
    for (double x : {-1.3, 0.4, 2.2}) {
        CHECK_THAT(hermite(3, x), WithinAbs(x * x * x - 3.0 * x, 1e-13));
        CHECK_THAT(hermite(4, x), WithinAbs(x * x * x * x - 6.0 * x * x + 3.0, 1e-12));
    }
    CHECK_THROWS_AS(hermite(51, 1.0), PreconditionError);
}

TEST_CASE("Hermite isometry", "[chaos_mc][mc]") {
    std::mt19937_64 g(7);
    std::normal_distribution<double> N;
    for (double r : {0.0, 0.5, 0.9}) {
        std::vector<double> prod;
        for (int i = 0; i < 20000; ++i) {
            const double a = N(g), b = r * a + std::sqrt(1.0 - r * r) * N(g);
            prod.push_back(hermite(2, a) * hermite(2, b));
        }
        const Moments m = moments(prod);
        CHECK(std::abs(m.mean - 2.0 * r * r) < 4.0 * std::sqrt(m.variance / m.n));
    }
}

TEST_CASE("Hermite limit covariance", "[chaos_mc]") {
    CHECK_THAT(hermite_limit_covariance(1.0, 1.0, 0.8), WithinRel(2.0 * 1.92, 1e-13));
    // T^{4H-2} scaling
    CHECK_THAT(hermite_limit_covariance(2.0, 2.0, 0.8), WithinRel(3.84 * std::pow(2.0, 1.2), 1e-13));
    // against a direct 1-d reduction of the double integral
    const double H = 0.85, a = 0.6, b = 1.4, g = 4.0 * H - 3.0;
    auto f = [&](double x) { return std::max(0.0, std::min(a, b - x) - std::max(0.0, -x)) * std::pow(std::abs(x), g - 1.0); };
    const double I = integrate_1d(f, -a, 0.0, 1e-12, 1e-300).value + integrate_1d(f, 0.0, b, 1e-12, 1e-300).value;
    const double direct = 2.0 * H * H * std::pow(2.0 * H - 1.0, 2.0) * I;
    CHECK_THAT(hermite_limit_covariance(a, b, H), WithinRel(direct, 1e-8));
    CHECK_THROWS_AS(hermite_limit_covariance(1.0, 1.0, 0.7), RegimeError);
}

TEST_CASE("Hermite approximant moments approach the limit", "[chaos_mc]") {
    const double target = hermite_limit_covariance(1.0, 1.0, 0.8);
    double prev = 0.0;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const double v = hermite_approx_covariance(eps, 1.0, 1.0, 0.8);
        INFO("eps " << eps << " ratio " << v / target);
        CHECK(v > prev);
        CHECK(v < target);
        prev = v;
    }
    // the grid moment converges to the continuous one as dt / eps shrinks
    const double eps = 0.01, cont = hermite_approx_covariance(eps, 1.0, 1.0, 0.8);
    double err_prev = 1.0;
    for (int per : {4, 8, 16}) {
        const TimeGrid grid{1.0, 100 * per};
        const double err = std::abs(hermite_approx_discrete_moment(eps, grid, 1.0, 0.8) / cont - 1.0);
        CHECK(err < err_prev);
        err_prev = err;
    }
    CHECK(err_prev < 1e-3);
}

TEST_CASE("Hermite approximant by Monte Carlo", "[chaos_mc][mc]") {
    const HurstConfig cfg{0.8, 1};
    const double eps = 0.02;
    const HermiteSample s = run_hermite_approx(cfg, eps, {0.5, 1.0}, 2000, 3);
    const Moments m = moments(s.values[1]);
    CHECK(std::abs(m.mean) < 3.0 * std::sqrt(m.variance / m.n));
    std::vector<double> sq(s.values[1].size()), cross(s.values[1].size());
    for (std::size_t i = 0; i < sq.size(); ++i) {
        sq[i] = s.values[1][i] * s.values[1][i];
        cross[i] = s.values[0][i] * s.values[1][i];
    }
    const Moments q = moments(sq), c = moments(cross);
    CHECK(std::abs(q.mean - hermite_approx_discrete_moment(eps, s.grid, 1.0, 0.8)) < 3.0 * std::sqrt(q.variance / q.n));
    // two-horizon structure against the continuous kernel, 15%
    CHECK_THAT(c.mean / q.mean, WithinRel(hermite_approx_covariance(eps, 0.5, 1.0, 0.8) /
                                              hermite_approx_covariance(eps, 1.0, 1.0, 0.8),
                                          0.15));
    CHECK_THROWS_AS(run_hermite_approx({0.7, 1}, eps, {1.0}, 10, 1), RegimeError);
    CHECK_THROWS_AS(run_hermite_approx(cfg, eps, {0.333}, 10, 1), ConfigError);
}

TEST_CASE("rho~_M closed form", "[chaos_mc]") {
    // direct Riemann sum written out independently
    const int d = 3, M = 6;
    double s = 0.0;
    for (int k = 2; k <= M * 64; ++k) {
        const double u = k / 64.0;
        s += u * u / std::pow(1.0 + std::pow(u, 1.5), 2.5);
    }
    const double pref = std::sqrt(9.0) / (std::pow(2.0, 4.0) * std::pow(std::numbers::pi, 1.5));
    CHECK_THAT(rho_tilde_M(M, d), WithinRel(pref * s / 64.0, 1e-13));
    // the sum approaches the truncated integral of the same integrand
    auto f = [](double u) { return u * u / std::pow(1.0 + std::pow(u, 1.5), 2.5); };
    for (int m : {8, 12}) {
        const double trunc = pref * integrate_1d(f, 0.0, m, 1e-12, 1e-300).value;
        CHECK_THAT(rho_tilde_M(m, d), WithinRel(trunc, 4.0 * std::ldexp(1.0, -m)));
    }
    // and increases with M
    double prev = 0.0;
    for (int m = 1; m <= 14; ++m) {
        const double v = rho_tilde_M(m, d);
        CHECK(v > prev);
        prev = v;
    }
    CHECK(prev < rho_const(d).value);
    CHECK_THROWS_AS(rho_tilde_M(12, 2), RegimeError);
}

TEST_CASE("critical chaos functionals", "[chaos_mc][mc]") {
    const HurstConfig cfg{0.75, 3};
    const double eps = 0.1, T = 1.0;
    const TimeGrid grid{2.0, 256};
    FbmSampler sampler(grid, cfg);
    std::vector<double> jt, diff2, diff4;
    for (std::uint64_t r = 0; r < 300; ++r) {
        const FbmPath p = sampler.sample(replicate_seed(11, r));
        const double j = j_tilde(p, eps, T);
        jt.push_back(j);
        const double r2 = riemann_log_chaos(p, eps, T, 2);
        const double r4 = riemann_log_chaos(p, eps, T, 4);
        diff2.push_back((r2 - j) * (r2 - j));
        diff4.push_back((r4 - j) * (r4 - j));
    }
    const Moments m = moments(jt);
    CHECK(std::abs(m.mean) < 3.0 * std::sqrt(m.variance / m.n));
    CHECK(moments(diff4).mean < moments(diff2).mean);
    const FbmPath p = sampler.sample(1);
    CHECK_THROWS_AS(j_tilde(sample_fbm(grid, {0.75, 2}, 1), eps, T), RegimeError);
    CHECK_THROWS_AS(riemann_log_chaos(p, eps, T, 0), PreconditionError);
    CHECK_THROWS_AS(hermite_process_approx(p, eps, T, 0), RegimeError);
}
