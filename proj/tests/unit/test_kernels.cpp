#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "silt/kernels.hpp"

using namespace silt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;

// alpha_q = [x^q] (1 - 4x)^{-d/2} = 4^q (d/2)_q / q!
double alpha_oracle(int q, int d) {
    return std::exp(q * std::log(4.0) + std::lgamma(0.5 * d + q) - std::lgamma(0.5 * d) - std::lgamma(q + 1.0));
}

struct PointGen {
    std::mt19937_64 g;
    explicit PointGen(std::uint64_t seed) : g(seed) {}
    KernelPoint operator()() {
        std::uniform_real_distribution<double> U(0.0, 1.0);
        auto scale = [&] { return std::pow(10.0, -2.0 + 4.0 * U(g)); };
        return {scale(), scale(), scale()};
    }
};

} // namespace

TEST_CASE("theta examples", "[kernels]") {
    CHECK_THAT(theta(1.0, {3.0, 1.0, 1.0}, {0.5, 2}), WithinAbs(4.0, 1e-14));
    CHECK_THAT(theta(0.0, {0.0, 1.0, 1.0}, {0.6, 3}), WithinAbs(0.0, 1e-14));
    for (double H : {0.3, 0.6, 0.9}) CHECK_THAT(theta(1.0, {0.0, 1.0, 1.0}, {H, 3}), WithinAbs(3.0, 1e-14));
}

TEST_CASE("F kernel examples", "[kernels]") {
    CHECK_THAT(F_kernel(1.0, {5.0, 1.0, 1.0}, {0.5, 3}), WithinAbs(0.0, 1e-16));
    const double expect = std::pow(kTwoPi, -3.0) * (std::pow(3.0, -1.5) - std::pow(4.0, -1.5));
    CHECK_THAT(F_kernel(1.0, {0.0, 1.0, 1.0}, {0.6, 3}), WithinRel(expect, 1e-13));
    CHECK_THAT(std::pow(3.0, -1.5) - std::pow(4.0, -1.5), WithinRel(0.0674500897, 1e-9));
}

TEST_CASE("G kernel examples", "[kernels]") {
    const KernelPoint p{0.7, 1.3, 0.4};
    const HurstConfig cfg{0.65, 3};
    const double expect = std::pow(1.0 + std::pow(1.3, 1.3), -1.5) * std::pow(1.0 + std::pow(0.4, 1.3), -1.5);
    CHECK_THAT(G_kernel(0, 1.0, p, cfg), WithinRel(expect, 1e-14));
    CHECK_THAT(G_kernel(1, 1.0, {0.0, 1.0, 1.0}, {0.7, 2}), WithinRel(0.0625, 1e-14));
}

TEST_CASE("alpha_q and beta_q", "[kernels]") {
    for (int d = 1; d <= 6; ++d) CHECK(alpha_q(1, d) == 2.0 * d);
    CHECK(alpha_q(2, 1) == 6.0);
    CHECK(alpha_q(2, 2) == 16.0);
    for (int d : {1, 2, 3, 5})
        for (int q : {1, 3, 7, 12, 20, 21, 30, 45, 60}) {
            INFO("q " << q << " d " << d);
            CHECK_THAT(alpha_q(q, d), WithinRel(alpha_oracle(q, d), 1e-11));
        }
    CHECK_THAT(beta_q(1, 2), WithinRel(std::pow(kTwoPi, -2.0), 1e-14));
    CHECK_THAT(beta_q(1, 3), WithinRel(6.0 / (std::pow(kTwoPi, 3.0) * 4.0), 1e-14));
    CHECK_THAT(beta_q(2, 1), WithinRel(6.0 / (kTwoPi * 16.0), 1e-14));
    CHECK_THROWS_AS(alpha_q(61, 3), RangeError);
    CHECK_THROWS_AS(beta_q(0, 3), PreconditionError);
}

TEST_CASE("exact and log-gamma alpha agree at the crossover", "[kernels]") {
    for (int d : {1, 2, 3, 4})
        for (int q : {15, 18, 20}) {
            const double exact = alpha_q_exact_int(q, d).convert_to<double>();
            CHECK_THAT(std::exp(log_alpha_q_lgamma(q, d)), WithinRel(exact, 1e-11));
        }
}

TEST_CASE("chaos series of F", "[kernels]") {
    const HurstConfig cfg{0.6, 3};
    auto zero = chaos_series_F(1.0, {5.0, 1.0, 1.0}, {0.5, 3}, 10);
    CHECK_THAT(zero.value, WithinAbs(0.0, 1e-15));
    CHECK(zero.remainder_bound == 0.0);
    const KernelPoint p{0.0, 1.0, 1.0};
    auto s = chaos_series_F(1.0, p, cfg, 20);
    const double F = F_kernel(1.0, p, cfg);
    CHECK(std::abs(s.value - F) <= std::max(1e-10, s.remainder_bound));
    CHECK(s.value <= F);

    PointGen gen(11);
    for (int i = 0; i < 10000; ++i) {
        const KernelPoint pt = gen();
        const double f = F_kernel(1.0, pt, cfg);
        const double g1 = beta_q(1, cfg.d) * G_kernel(1, 1.0, pt, cfg);
        REQUIRE(g1 <= f * (1.0 + 1e-12));
        auto c = chaos_series_F(1.0, pt, cfg, 1);
        REQUIRE(c.value <= f * (1.0 + 1e-12));
        REQUIRE(f >= 0.0);
    }
}

TEST_CASE("F equals product moment minus product of means", "[kernels][property]") {
    PointGen gen(12);
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> UH(0.55, 0.95), Ue(0.01, 2.0);
    for (int i = 0; i < 10000; ++i) {
        const HurstConfig cfg{UH(g), 1 + static_cast<int>(i % 4)};
        const double eps = Ue(g);
        KernelPoint p = gen();
        const double pm = product_moment(eps, p.x, p.u1, p.u2, cfg);
        const double prod = expected_heat_kernel(eps, p.u1, cfg) * expected_heat_kernel(eps, p.u2, cfg);
        const double F = F_kernel(eps, p, cfg);
        // subtraction cancels when F is small relative to the product
        REQUIRE(std::abs(F - (pm - prod)) <= 1e-12 * pm);
    }
}

TEST_CASE("eps scaling identities", "[kernels][property]") {
    PointGen gen(13);
    std::mt19937_64 g(6);
    std::uniform_real_distribution<double> UH(0.55, 0.95), Ue(0.001, 10.0);
    for (int i = 0; i < 10000; ++i) {
        const HurstConfig cfg{UH(g), 1 + static_cast<int>(i % 4)};
        const double eps = Ue(g);
        const double s = std::pow(eps, 0.5 / cfg.H);
        const KernelPoint p = gen();
        const KernelPoint ps{s * p.x, s * p.u1, s * p.u2};
        REQUIRE_THAT(theta(eps, ps, cfg), WithinRel(eps * eps * theta(1.0, p, cfg), 1e-11));
        const double gq = G_kernel(2, 1.0, p, cfg);
        REQUIRE_THAT(G_kernel(2, eps, ps, cfg), WithinRel(std::pow(eps, -cfg.d) * gq, 1e-11));
        const double f = F_kernel(1.0, p, cfg);
        if (f > 1e-280) REQUIRE_THAT(F_kernel(eps, ps, cfg), WithinRel(std::pow(eps, -cfg.d) * f, 1e-10));
    }
}

TEST_CASE("F is bounded by the Theta bound", "[kernels][property]") {
    PointGen gen(14);
    for (int d : {2, 3, 4}) {
        const HurstConfig cfg{0.7, d};
        for (int i = 0; i < 5000; ++i) {
            const KernelPoint p = gen();
            REQUIRE(F_kernel(1.0, p, cfg) <= F_theta_bound(1.0, p, cfg) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("regions cover the octant", "[kernels][property]") {
    std::mt19937_64 g(15);
    std::uniform_real_distribution<double> U(0.0, 5.0);
    for (int i = 0; i < 100000; ++i) {
        const KernelPoint p{U(g), U(g), U(g)};
        int hits = 0;
        for (int r = 1; r <= 3; ++r) hits += in_region({r}, p);
        REQUIRE(hits >= 1);
        REQUIRE(hits == 1); // overlaps are boundaries, hit with probability 0
    }
    for (int r = 1; r <= 3; ++r) {
        const KernelPoint p = region_point({r}, 0.3, 0.7, 1.1);
        CHECK(in_region({r}, p));
    }
}

TEST_CASE("heat kernel moments", "[kernels]") {
    CHECK_THAT(expected_heat_kernel(1.0, 0.0, {0.6, 2}), WithinRel(1.0 / kTwoPi, 1e-15));
    CHECK_THAT(expected_heat_kernel(0.5, 1.0, {0.8, 2}), WithinRel(0.10610329539, 1e-9));
    CHECK_THAT(product_moment(1.0, 5.0, 1.0, 1.0, {0.5, 2}), WithinRel(std::pow(kTwoPi, -2.0) / 4.0, 1e-14));

    // Monte Carlo oracle: B_t - B_s ~ N(0, u^{2H} I)
    std::mt19937_64 g(16);
    std::normal_distribution<double> N;
    const HurstConfig cfg{0.7, 2};
    const double eps = 0.3, u = 0.8, sd = std::pow(u, cfg.H);
    double s = 0.0, s2 = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double z1 = sd * N(g), z2 = sd * N(g);
        const double v = heat_kernel(eps, z1 * z1 + z2 * z2, 2);
        s += v;
        s2 += v * v;
    }
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - expected_heat_kernel(eps, u, cfg)) < 3.0 * se);
}

TEST_CASE("product moment by Monte Carlo", "[kernels]") {
    // two overlapping increments of fBm in d = 1 drawn from their 2x2 covariance
    const HurstConfig cfg{0.7, 1};
    const double eps = 0.4, x = 0.3, u1 = 1.0, u2 = 0.8;
    const double v1 = std::pow(u1, 2 * cfg.H), v2 = std::pow(u2, 2 * cfg.H), c = mu(x, u1, u2, cfg.H);
    const double l11 = std::sqrt(v1), l21 = c / l11, l22 = std::sqrt(v2 - l21 * l21);
    std::mt19937_64 g(17);
    std::normal_distribution<double> N;
    double s = 0.0, s2 = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double a = N(g), b = N(g);
        const double y1 = l11 * a, y2 = l21 * a + l22 * b;
        const double v = heat_kernel(eps, y1 * y1, 1) * heat_kernel(eps, y2 * y2, 1);
        s += v;
        s2 += v * v;
    }
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - product_moment(eps, x, u1, u2, cfg)) < 3.0 * se);
}

TEST_CASE("local nondeterminism ratios", "[kernels]") {
    std::mt19937_64 g(18);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto draw = [&] { return std::pow(10.0, -2.0 + 4.0 * U(g)); };
    for (int i = 0; i < 1000; ++i) {
        const double a = draw(), b = draw(), c = draw();
        REQUIRE_THAT(lnd_margin({3}, a, b, c, 0.5), WithinRel(1.0, 1e-9));
        REQUIRE(lnd_margin({2}, a, b, c, 0.6) > 0.0);
    }
    double floor3 = 1e300;
    for (int i = 0; i < 100000; ++i) floor3 = std::min(floor3, lnd_margin({3}, draw(), draw(), draw(), 0.75));
    CHECK(floor3 > 0.05);
}

TEST_CASE("mu decay bounds", "[kernels]") {
    const MuBound m = mu_bound_check(1.0, 1.0, 1.0, 0.75);
    // mu(2, 1, 1) at H = 3/4
    CHECK_THAT(m.lhs / m.rhs1, WithinRel(0.5 * (std::pow(3.0, 1.5) + 1.0 - 2.0 * std::pow(2.0, 1.5)), 1e-12));
    // b -> infinity: mu b^{2-2H} / (a c) -> H (2H - 1)
    for (double H : {0.6, 0.75, 0.9}) {
        const MuBound f = mu_bound_check(0.5, 1e5, 0.7, H);
        CHECK_THAT(f.lhs / f.rhs1, WithinRel(f.k1, 1e-4));
    }
    // H = 3/4: x mu(x, u1, u2)^2 -> 9 (u1 u2)^2 / 64
    const double x = 1e7, u1 = 0.8, u2 = 1.3;
    const double m2 = mu(x, u1, u2, 0.75);
    CHECK_THAT(x * m2 * m2, WithinRel(9.0 * u1 * u1 * u2 * u2 / 64.0, 1e-5));
}

TEST_CASE("kernel preconditions", "[kernels]") {
    const HurstConfig cfg{0.6, 3};
    CHECK_THROWS_AS(F_kernel(0.0, {1.0, 1.0, 1.0}, cfg), PreconditionError);
    CHECK_THROWS_AS(G_kernel(-1, 1.0, {1.0, 1.0, 1.0}, cfg), PreconditionError);
    CHECK_THROWS_AS(theta(-1.0, {1.0, 1.0, 1.0}, cfg), PreconditionError);
    CHECK_THROWS_AS(lnd_margin({4}, 1.0, 1.0, 1.0, 0.6), PreconditionError);
}
