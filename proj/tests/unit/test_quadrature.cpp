#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "silt/quadrature.hpp"

using namespace silt;
using Catch::Matchers::WithinRel;

TEST_CASE("1-d Gauss-Kronrod on smooth and endpoint-singular integrands", "[quadrature]") {
    auto r = integrate_1d([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-13, 1e-300);
    CHECK(r.converged);
    CHECK_THAT(r.value, WithinRel(std::numbers::e - 1.0, 1e-13));
    auto s = integrate_1d([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10, 1e-300);
    CHECK_THAT(s.value, WithinRel(2.0, 1e-9));
    auto z = integrate_1d([](double) { return 1.0; }, 2.0, 2.0, 1e-10, 1e-300);
    CHECK(z.value == 0.0);
    CHECK(z.converged);
}

TEST_CASE("half-line transforms agree", "[quadrature]") {
    auto f = [](double u) { return 1.0 / (1.0 + u * u); };
    for (Transform t : {Transform::Rational, Transform::Tangent}) {
        QuadSpec spec;
        spec.rel_tol = 1e-11;
        spec.transform = t;
        auto r = integrate_half_line(f, spec);
        INFO(transform_name(t));
        CHECK(r.converged);
        CHECK_THAT(r.value, WithinRel(std::numbers::pi / 2, 1e-10));
    }
    QuadSpec trunc;
    trunc.rel_tol = 1e-11;
    trunc.truncation_radius = 10.0;
    CHECK_THAT(integrate_half_line(f, trunc).value, WithinRel(std::atan(10.0), 1e-10));
}

TEST_CASE("budget exhaustion is reported", "[quadrature]") {
    auto r = integrate_1d([](double x) { return std::sin(1.0 / (x + 1e-9)); }, 0.0, 1.0, 1e-14, 1e-300, 2000);
    CHECK_FALSE(r.converged);
    CHECK_FALSE(r.note.empty());
}

TEST_CASE("Genz-Malik cubature on polynomials and Gaussians", "[quadrature]") {
    auto poly = [](const std::array<double, 3>& v) { return v[0] * v[0] * v[1] + v[2]; };
    auto r = cubature<3>(poly, {0.0, 0.0, 0.0}, {1.0, 2.0, 3.0}, 1e-12, 1e-300, 1'000'000, 1);
    // x^2 y over the box: 1/3 * 2 * 3; z: 1 * 2 * 4.5
    CHECK_THAT(r.value, WithinRel(2.0 + 9.0, 1e-12));

    QuadSpec spec;
    spec.rel_tol = 1e-8;
    auto g = [](const std::array<double, 3>& u) { return std::exp(-(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])); };
    auto o = integrate_orthant<3>(g, spec);
    CHECK(o.converged);
    CHECK_THAT(o.value, WithinRel(std::pow(std::sqrt(std::numbers::pi) / 2.0, 3), 1e-7));
}

TEST_CASE("cubature result is independent of the thread count", "[quadrature]") {
    auto f = [](const std::array<double, 2>& v) { return std::exp(-v[0] * v[1]) / (0.1 + v[0]); };
    auto a = cubature<2>(f, {0.0, 0.0}, {1.0, 1.0}, 1e-10, 1e-300, 1'000'000, 1);
    auto b = cubature<2>(f, {0.0, 0.0}, {1.0, 1.0}, 1e-10, 1e-300, 1'000'000, 3);
    CHECK(a.value == b.value);
    CHECK(a.evals == b.evals);
}

TEST_CASE("QuadSpec validation", "[quadrature]") {
    QuadSpec s;
    s.rel_tol = 0.0;
    CHECK_THROWS_AS(s.validate(), PreconditionError);
    QuadSpec t;
    t.transform = Transform::None;
    CHECK_THROWS_AS(t.validate(), PreconditionError);
}
