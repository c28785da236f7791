#include <catch_amalgamated.hpp>

#include <cmath>

#include "silt/verify.hpp"

using namespace silt;
using Catch::Matchers::WithinRel;

namespace {

MonteCarloConfig quick_mc(std::vector<double> eps, int steps = 64) {
    MonteCarloConfig mc;
    mc.replicates = 200;
    mc.eps_list = std::move(eps);
    mc.steps_per_unit = steps;
    mc.base_seed = 17;
    return mc;
}

bool has_check(const ExperimentResult& r, const std::string& id) { return r.find(id) != nullptr; }

} // namespace

TEST_CASE("subcritical experiment structure", "[verify]") {
    SubcriticalOptions o;
    o.quadrature_cross_check = false;
    const ExperimentResult r = run_subcritical({0.6, 3}, quick_mc({0.2, 0.1, 0.05}), {0.5, 1.0}, {}, o);
    CHECK(r.experiment == "subcritical");
    CHECK(r.per_eps.size() == 3);
    for (const char* id : {"variance", "covariance", "skewness", "kurtosis", "increments"}) CHECK(has_check(r, id));
    CHECK_FALSE(r.find("increments")->gating);
    for (const auto& t : r.targets) CHECK_FALSE(t.provenance.empty());
    for (const auto& e : r.per_eps) {
        CHECK(e.report.variance >= 0.0);
        CHECK(e.report.normality_p >= 0.0);
        CHECK(e.report.normality_p <= 1.0);
        CHECK(e.report.covariance.size() == 4);
    }
    CHECK(r.samples.size() == 3);
    CHECK(r.samples[0][1].size() == 200);
    // fewer than 1000 replicates is flagged
    CHECK_FALSE(r.notes.empty());
}

TEST_CASE("experiments are deterministic", "[verify]") {
    SubcriticalOptions o;
    o.quadrature_cross_check = false;
    const ExperimentResult a = run_subcritical({0.6, 3}, quick_mc({0.2, 0.1, 0.05}), {0.5, 1.0}, {}, o);
    const ExperimentResult b = run_subcritical({0.6, 3}, quick_mc({0.2, 0.1, 0.05}), {0.5, 1.0}, {}, o);
    CHECK(a.samples == b.samples);
    for (std::size_t i = 0; i < a.checks.size(); ++i) CHECK(a.checks[i].observed == b.checks[i].observed);
}

TEST_CASE("supercritical experiment structure", "[verify]") {
    SupercriticalOptions o;
    o.quadrature_cross_check = false;
    o.hermite_eps = 0.02;
    o.hermite_replicates = 50;
    const ExperimentResult r = run_supercritical({0.8, 2}, quick_mc({0.1, 0.05, 0.02}), {0.5, 1.0}, {}, o);
    for (const char* id : {"residual_decay", "j2_kurtosis", "horizon_scaling", "candidate", "hermite_moment"})
        CHECK(has_check(r, id));
    CHECK_FALSE(r.find("candidate")->gating);
    // candidate variances at (0.8, 2), T = 1
    const double L = lambda_const({0.8, 2}).value;
    CHECK_THAT(supercritical_variance_A({0.8, 2}, L, 1.0), WithinRel(0.980253, 1e-5));
    CHECK_THAT(supercritical_variance_B({0.8, 2}, L, 1.0), WithinRel(0.00620752, 1e-5));
}

TEST_CASE("critical experiment structure", "[verify]") {
    CriticalOptions o;
    o.quadrature_cross_check = false;
    const ExperimentResult r = run_critical_log({0.75, 3}, quick_mc({0.1, 0.05, 0.02}), {1.0}, {}, o);
    for (const char* id : {"variance_trend", "normality", "residual_decay", "rho_tilde"}) CHECK(has_check(r, id));
    CHECK_FALSE(r.find("residual_decay")->gating);
}

TEST_CASE("regime guards", "[verify]") {
    CHECK_THROWS_AS(run_critical_log({0.75, 2}, quick_mc({0.1, 0.01, 0.001}), {1.0}), RegimeError);
    CHECK_THROWS_AS(run_subcritical({0.8, 2}, quick_mc({0.1, 0.05, 0.02}), {0.5, 1.0}), RegimeError);
    CHECK_THROWS_AS(run_supercritical({0.6, 3}, quick_mc({0.1, 0.05, 0.02}), {0.5, 1.0}), RegimeError);
    CHECK_THROWS_AS(run_supercritical({0.8, 2}, quick_mc({0.1, 0.05}), {0.5, 1.0}), ConfigError);
    CHECK_THROWS_AS(tightness_probe({0.8, 2}, quick_mc({0.05}), 0.1, 2.5), RegimeError);
    CHECK_THROWS_AS(tightness_probe({0.6, 3}, quick_mc({0.05}), 0.1, 2.0), PreconditionError);
}

TEST_CASE("tightness probe", "[verify]") {
    TightnessOptions o;
    o.gaps = {0.0, 0.2, 0.4, 0.8};
    o.run_probe = false;
    MonteCarloConfig mc = quick_mc({0.05}, 80);
    const ExperimentResult r = tightness_probe({0.6, 3}, mc, 0.1, 2.2, {}, o);
    REQUIRE(r.per_eps.size() == 1);
    const auto& extra = r.per_eps[0].extra;
    CHECK(extra[0].second == 0.0); // degenerate gap
    CHECK(extra[1].second > 0.0);
    CHECK(extra[3].second > extra[1].second);
    CHECK(has_check(r, "slope"));
    // p inside (2, 4Hd/3) = (2, 2.4) carries no range note
    for (const auto& n : r.notes) CHECK(n.find("outside") == std::string::npos);
    const ExperimentResult far = tightness_probe({0.6, 3}, mc, 0.1, 2.5, {}, o);
    bool flagged = false;
    for (const auto& n : far.notes) flagged = flagged || n.find("outside") != std::string::npos;
    CHECK(flagged);
}
