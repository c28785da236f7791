#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fbm_core.hpp"
#include "kernels.hpp"
#include "quadrature.hpp"

namespace silt {

namespace detail {

// sum over the three regions of the integral of f(point) with unit Jacobian.
template <class F>
QuadResult integrate_regions(F&& f, const QuadSpec& spec) {
    QuadResult total;
    total.converged = true;
    for (int r = 1; r <= 3; ++r) {
        RegionTag tag{r};
        auto g = [&](const std::array<double, 3>& v) { return f(region_point(tag, v[0], v[1], v[2])); };
        QuadResult part = integrate_orthant<3>(g, spec);
        if (!part.note.empty()) part.note = "region " + std::to_string(r) + ": " + part.note;
        total += part;
    }
    return total;
}

} // namespace detail

// 2 * integral over the positive octant of F_1, split over the three regions.
inline QuadResult sigma_squared(const HurstConfig& cfg, const QuadSpec& spec = {}) {
    require_regime(cfg, Regime::Subcritical, "sigma_squared");
    auto f = [&](const KernelPoint& p) { return F_kernel(1.0, p, cfg); };
    return detail::integrate_regions(f, spec).scaled(2.0);
}

// Same integral over the octant in (x, u1, u2) without the region split.
inline QuadResult sigma_squared_octant(const HurstConfig& cfg, const QuadSpec& spec = {}) {
    require_regime(cfg, Regime::Subcritical, "sigma_squared_octant");
    auto f = [&](const std::array<double, 3>& u) { return F_kernel(1.0, {u[0], u[1], u[2]}, cfg); };
    return integrate_orthant<3>(f, spec).scaled(2.0);
}

inline QuadResult sigma_q_squared(int q, const HurstConfig& cfg, const QuadSpec& spec = {}) {
    require_regime(cfg, Regime::Subcritical, "sigma_q_squared");
    if (q < 1) throw PreconditionError("sigma_q_squared needs q >= 1");
    const double b = beta_q(q, cfg.d);
    auto f = [&](const KernelPoint& p) { return G_kernel(q, 1.0, p, cfg); };
    return detail::integrate_regions(f, spec).scaled(2.0 * b);
}

namespace detail {

// Integral over [R, inf) of u^2 (1 + u^{2H})^{-a}, R > 1, by the binomial
// expansion of (1 + u^{-2H})^{-a}.
inline double power_tail(double R, double H, double a) {
    double sum = 0.0;
    double coef = 1.0; // binom(-a, k)
    for (int k = 0; k < 4000; ++k) {
        const double expo = 2.0 * H * (a + k) - 3.0;
        const double term = coef * std::pow(R, -expo) / expo;
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        coef *= -(a + k) / (k + 1.0);
    }
    return sum;
}

// Integral over [0, inf) of u^2 (1 + u^{2H})^{-a}.
inline QuadResult power_integral(double H, double a, const QuadSpec& spec) {
    spec.validate();
    if (!(2.0 * H * a > 3.0)) throw ConvergenceError("integral diverges: tail exponent 2 - 2H a >= -1");
    auto g = [H, a](double u) { return u * u * std::pow(1.0 + std::pow(u, 2.0 * H), -a); };
    if (std::isinf(spec.truncation_radius)) {
        // u = y^m makes the tail decay like y^{-3} or faster, so the mapped
        // integrand stays bounded at the far end of either transform.
        const double m = std::max(1.0, 2.0 / (2.0 * H * a - 3.0));
        // evaluated in logs since y^m overflows long before the integrand vanishes
        auto gy = [&](double y) {
            if (y == 0.0) return 0.0;
            const double lu = m * std::log(y), z = 2.0 * H * lu;
            const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
            return std::exp(3.0 * lu - a * softplus + std::log(m) - std::log(y));
        };
        return integrate_half_line(gy, spec);
    }
    const double R = std::max(spec.truncation_radius, 2.0);
    QuadResult r = integrate_1d(g, 0.0, R, spec);
    r.value += power_tail(R, H, a);
    r.note = "analytic tail from R=" + std::to_string(R);
    return r;
}

} // namespace detail

inline QuadResult lambda_const(const HurstConfig& cfg, const QuadSpec& spec = {}) {
    cfg.validate();
    if (!(cfg.H > 0.75)) throw RegimeError("lambda_const requires H > 3/4");
    const double a = 0.5 * cfg.d + 1.0;
    if (!(2.0 * cfg.H * a > 3.0))
        throw ConvergenceError("lambda_const diverges: 2H(d/2+1) - 2 <= 1 for H=" + std::to_string(cfg.H) +
                               ", d=" + std::to_string(cfg.d));
    return detail::power_integral(cfg.H, a, spec).scaled(0.5 * inv_two_pi_pow(0.5 * cfg.d));
}

inline double rho_prefactor(int d) {
    return std::sqrt(3.0 * d) / (std::pow(2.0, 0.5 * (d + 5)) * std::pow(std::numbers::pi, 0.5 * d));
}

inline QuadResult rho_const(int d, const QuadSpec& spec = {}) {
    if (d < 3) throw RegimeError("rho_const requires d >= 3");
    return detail::power_integral(0.75, 0.5 * d + 1.0, spec).scaled(rho_prefactor(d));
}

inline constexpr double kCHGuard = 1e-9;

inline double c_H_const(double H) {
    if (!(H > 0.75 + kCHGuard) || !(H < 1.0)) throw RegimeError("c_H requires 3/4 < H < 1");
    return H * H * (2.0 * H - 1.0) / (4.0 * H - 3.0);
}

// H^2 (2H-1)^2 times the 2-d integral of |s1 - s2|^{4H-4} over the unit
// square, by cubature. The singular diagonal is removed by a power
// substitution; a finite truncation radius R excludes the band |s1-s2| < 1/R
// and adds its closed-form mass.
inline QuadResult c_H_quadrature(double H, const QuadSpec& spec = {}) {
    if (!(H > 0.75 + kCHGuard) || !(H < 1.0)) throw RegimeError("c_H requires 3/4 < H < 1");
    spec.validate();
    const double g = 4.0 * H - 3.0;
    const double k = 1.0 / g;
    const double delta = std::isinf(spec.truncation_radius) ? 0.0 : 1.0 / spec.truncation_radius;
    const Transform tr = spec.transform;
    // Upper triangle s1 > s2: s2 = sigma, s1 - s2 = h in [delta, 1 - sigma].
    auto f = [&](const std::array<double, 2>& v) {
        const double sigma = v[0] * (1.0 - delta);
        const double span = 1.0 - sigma - delta;
        if (span <= 0.0) return 0.0;
        double t, dt;
        if (tr == Transform::Tangent) {
            t = std::tan(0.25 * std::numbers::pi * v[1]);
            dt = 0.25 * std::numbers::pi * (1.0 + t * t);
        } else {
            t = v[1];
            dt = 1.0;
        }
        // tau = t^k so that tau^{g-1} dtau = k t^{k g - 1} ... = k dt.
        const double tau = std::pow(t, k);
        const double h = delta + span * tau;
        const double dtau = k * std::pow(t, k - 1.0) * dt;
        const double w = std::pow(h, g - 1.0) * span * dtau * (1.0 - delta);
        return std::isfinite(w) ? w : 0.0;
    };
    QuadResult r = cubature<2>(f, {0.0, 0.0}, {1.0, 1.0}, spec);
    r = r.scaled(2.0);
    if (delta > 0.0) {
        r.value += 2.0 * (std::pow(delta, g) / g - std::pow(delta, g + 1.0) / (g + 1.0));
        r.note = "closed-form band |s1-s2| < " + std::to_string(delta);
    }
    return r.scaled(H * H * (2.0 * H - 1.0) * (2.0 * H - 1.0));
}

// ---------------------------------------------------------------------------
// Integrability probes
// ---------------------------------------------------------------------------

struct ProbeResult {
    QuadResult result;         // extrapolated value and convergence verdict
    std::vector<double> radii; // truncation radii used
    std::vector<double> values;
    double decay_ratio = 0.0;  // successive-difference ratio under doubling
};

namespace detail {

// Integral of f over [0, R)^3 (region coordinates) under the QuadSpec transform.
template <class F>
QuadResult truncated_orthant(F&& f, double R, const QuadSpec& spec) {
    QuadSpec s = spec;
    s.truncation_radius = R;
    return integrate_orthant<3>(f, s);
}

// Truncation-doubling study with geometric extrapolation of the tail. Doubles
// R until two successive extrapolations agree or R passes max_radius.
template <class F>
ProbeResult doubling_study(F&& f, const QuadSpec& spec, double stability_tol, double max_radius = 1048576.0) {
    ProbeResult out;
    double R = std::isinf(spec.truncation_radius) ? 64.0 : spec.truncation_radius;
    QuadResult res;
    res.converged = false;
    double e_old = std::numeric_limits<double>::infinity();
    double err = 0.0;
    bool qconv = true;
    for (; R <= max_radius; R *= 2.0) {
        const QuadResult q = truncated_orthant(f, R, spec);
        res.evals += q.evals;
        err = std::max(err, q.error_estimate);
        qconv = qconv && q.converged;
        out.radii.push_back(R);
        out.values.push_back(q.value);
        const auto& v = out.values;
        const std::size_t n = v.size();
        if (n < 3) continue;
        const double dprev = v[n - 2] - v[n - 3], dlast = v[n - 1] - v[n - 2];
        const double noise = 4.0 * err;
        if (std::abs(dlast) <= noise && std::abs(dprev) <= noise) {
            res.value = v[n - 1];
            res.converged = qconv;
            res.note = "tail below quadrature error";
            break;
        }
        const double ratio = dprev != 0.0 ? dlast / dprev : 0.0;
        out.decay_ratio = ratio;
        const double e_new = ratio >= 0.0 && ratio < 1.0 ? v[n - 1] + dlast * ratio / (1.0 - ratio)
                                                         : std::numeric_limits<double>::infinity();
        if (std::isfinite(e_new) && std::isfinite(e_old) && std::abs(e_new - e_old) <= stability_tol * std::abs(e_new)) {
            res.value = e_new;
            res.converged = qconv;
            err += std::abs(e_new - e_old);
            res.note = "tail extrapolated, doubling ratio " + std::to_string(ratio);
            break;
        }
        e_old = e_new;
    }
    res.error_estimate = err;
    if (res.note.empty()) {
        res.value = out.values.back();
        res.note = "divergent under truncation doubling, ratio " + std::to_string(out.decay_ratio);
    }
    out.result = res;
    return out;
}

} // namespace detail

inline constexpr double kProbeStabilityTol = 0.05;

// Integral of mu^2/(u1 u2)^{2H} Theta_1^{-d/p} over region S_i (index 1..3)
// or over the whole octant (index 0, needs H < 3/4).
inline ProbeResult integrability_probe(int region, double p, const HurstConfig& cfg, const QuadSpec& spec = {}) {
    cfg.validate();
    if (!(p > 0.0)) throw PreconditionError("integrability_probe needs p > 0");
    if (!(cfg.H > 1.5 / cfg.d)) throw RegimeError("integrability_probe requires H > 3/(2d)");
    if (region == 0) {
        if (!(cfg.H < 0.75)) throw RegimeError("full-octant probe requires H < 3/4");
        auto f = [&](const std::array<double, 3>& u) { return tightness_integrand(p, {u[0], u[1], u[2]}, cfg); };
        return detail::doubling_study(f, spec, kProbeStabilityTol);
    }
    RegionTag tag{region};
    tag.validate();
    auto f = [&](const std::array<double, 3>& v) {
        return tightness_integrand(p, region_point(tag, v[0], v[1], v[2]), cfg);
    };
    return detail::doubling_study(f, spec, kProbeStabilityTol);
}

// The epsilon-dependent integral whose supremum over eps is finite in the
// supercritical tightness argument:
//   int_{R+^2} int_0^T eps^{-2/H} mu(x, eps^{1/2H} u1, eps^{1/2H} u2)^2
//       (u1 u2)^{-2H} Theta_1(eps^{-1/2H} x, u1, u2)^{-d/p} dx du1 du2.
inline QuadResult tightness_sup_integral(double eps, double p, double T, const HurstConfig& cfg,
                                         const QuadSpec& spec = {}) {
    if (!(cfg.H > 0.75)) throw RegimeError("tightness_sup_integral requires H > 3/4");
    if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("eps must lie in (0,1)");
    const double s = std::pow(eps, 0.5 / cfg.H);
    HalfLineMap map = half_line(spec);
    auto f = [&](const std::array<double, 3>& v) {
        double j1, j2;
        const double u1 = map(v[1], j1), u2 = map(v[2], j2);
        if (u1 == 0.0 || u2 == 0.0) return 0.0;
        const double m = mu(v[0], s * u1, s * u2, cfg.H);
        const double th = theta(1.0, {v[0] / s, u1, u2}, cfg);
        return std::pow(eps, -2.0 / cfg.H) * m * m / std::pow(u1 * u2, 2.0 * cfg.H) * std::pow(th, -cfg.d / p) *
               j1 * j2;
    };
    return cubature<3>(f, {0.0, 0.0, 0.0}, {T, map.vmax(), map.vmax()}, spec);
}

// Critical-case analogue normalized by eps^{-8/3} / log(1/eps) (H = 3/4).
inline QuadResult tightness_log_integral(double eps, double p, double T, int d, const QuadSpec& spec = {}) {
    if (d < 3) throw RegimeError("tightness_log_integral requires d >= 3");
    if (!(eps > 0.0 && eps < 1.0 / std::numbers::e)) throw PreconditionError("eps must lie in (0,1/e)");
    const HurstConfig cfg{0.75, d};
    const double s = std::pow(eps, 2.0 / 3.0);
    const double norm = std::pow(eps, -8.0 / 3.0) / std::log(1.0 / eps);
    HalfLineMap map = half_line(spec);
    auto f = [&](const std::array<double, 3>& v) {
        double j1, j2;
        const double u1 = map(v[1], j1), u2 = map(v[2], j2);
        if (u1 == 0.0 || u2 == 0.0) return 0.0;
        const double m = mu(v[0], s * u1, s * u2, cfg.H);
        const double th = theta(1.0, {v[0] / s, u1, u2}, cfg);
        return norm * m * m / std::pow(u1 * u2, 1.5) * std::pow(th, -d / p) * j1 * j2;
    };
    return cubature<3>(f, {0.0, 0.0, 0.0}, {T, map.vmax(), map.vmax()}, spec);
}

} // namespace silt
