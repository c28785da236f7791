#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "errors.hpp"
#include "fbm_core.hpp"

namespace silt {

struct KernelPoint {
    double x = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;
};

// Index of one of the three regions partitioning the positive octant.
struct RegionTag {
    int index = 1;

    void validate() const {
        if (index < 1 || index > 3) throw PreconditionError("region index must be 1, 2 or 3");
    }
};

inline bool in_region(RegionTag r, const KernelPoint& p) {
    switch (r.index) {
    case 1: return p.x + p.u2 - p.u1 >= 0.0 && p.u1 - p.x >= 0.0;
    case 2: return p.u1 - p.x - p.u2 >= 0.0;
    case 3: return p.x - p.u1 >= 0.0;
    default: throw PreconditionError("region index must be 1, 2 or 3");
    }
}

// Unit-Jacobian parametrization of region r by (a, b, c) in the positive octant.
inline KernelPoint region_point(RegionTag r, double a, double b, double c) {
    switch (r.index) {
    case 1: return {a, a + b, b + c};
    case 2: return {a, a + b + c, b};
    case 3: return {a + b, a, c};
    default: throw PreconditionError("region index must be 1, 2 or 3");
    }
}

inline double inv_two_pi_pow(double e) { return std::pow(2.0 * std::numbers::pi, -e); }

// ---------------------------------------------------------------------------
// Covariance kernels
// ---------------------------------------------------------------------------

inline double theta(double eps, const KernelPoint& p, const HurstConfig& cfg) {
    if (eps < 0.0) throw PreconditionError("theta needs eps >= 0");
    const double h2 = 2.0 * cfg.H;
    const double a = std::pow(p.u1, h2);
    const double b = std::pow(p.u2, h2);
    const double m = mu(p.x, p.u1, p.u2, cfg.H);
    return eps * eps + eps * (a + b) + a * b - m * m;
}

namespace detail {

struct KernelParts {
    double A;   // eps + u1^{2H}
    double B;   // eps + u2^{2H}
    double mu;  // mu(x, u1, u2)
    double rho; // mu^2 / (A B)
};

inline KernelParts kernel_parts(double eps, const KernelPoint& p, const HurstConfig& cfg) {
    const double h2 = 2.0 * cfg.H;
    KernelParts k;
    k.A = eps + std::pow(p.u1, h2);
    k.B = eps + std::pow(p.u2, h2);
    k.mu = mu(p.x, p.u1, p.u2, cfg.H);
    k.rho = k.mu * k.mu / (k.A * k.B);
    return k;
}

} // namespace detail

// Cov[p_eps(B_{u1}), p_eps(B_{x+u2} - B_x)].
inline double F_kernel(double eps, const KernelPoint& p, const HurstConfig& cfg) {
    if (!(eps > 0.0)) throw PreconditionError("F_kernel needs eps > 0");
    auto k = detail::kernel_parts(eps, p, cfg);
    const double half_d = 0.5 * cfg.d;
    double log_gap; // log(1 - rho)
    if (k.rho < 0.5) {
        log_gap = std::log1p(-k.rho);
    } else {
        // 1 - rho = Theta_eps / (A B), with the Cauchy-Schwarz part clipped at 0.
        const double a = k.A - eps, b = k.B - eps;
        const double gap = eps * eps + eps * (a + b) + std::max(a * b - k.mu * k.mu, 0.0);
        if (!(gap > 0.0)) throw DomainError("F_kernel: (eps+u1^2H)(eps+u2^2H) <= mu^2");
        log_gap = std::log(gap) - std::log(k.A) - std::log(k.B);
    }
    return inv_two_pi_pow(cfg.d) * std::pow(k.A * k.B, -half_d) * std::expm1(-half_d * log_gap);
}

inline double G_kernel(int q, double eps, const KernelPoint& p, const HurstConfig& cfg) {
    if (q < 0) throw PreconditionError("G_kernel needs q >= 0");
    if (!(eps > 0.0)) throw PreconditionError("G_kernel needs eps > 0");
    auto k = detail::kernel_parts(eps, p, cfg);
    return std::pow(k.A * k.B, -0.5 * cfg.d) * std::pow(k.rho, q);
}

// E[p_eps(B_t - B_s)] with u = t - s.
inline double expected_heat_kernel(double eps, double u, const HurstConfig& cfg) {
    if (!(eps > 0.0)) throw PreconditionError("expected_heat_kernel needs eps > 0");
    return inv_two_pi_pow(0.5 * cfg.d) * std::pow(eps + std::pow(u, 2.0 * cfg.H), -0.5 * cfg.d);
}

// E[p_eps(B_{t1} - B_{s1}) p_eps(B_{t2} - B_{s2})] at (x, u1, u2).
inline double product_moment(double eps, double x, double u1, double u2, const HurstConfig& cfg) {
    if (!(eps > 0.0)) throw PreconditionError("product_moment needs eps > 0");
    return inv_two_pi_pow(cfg.d) * std::pow(theta(eps, {x, u1, u2}, cfg), -0.5 * cfg.d);
}

// Upper bound (d/2+1) (2pi)^{-d} mu^2 / (u1 u2)^{2H} Theta_eps^{-d/2} on F.
inline double F_theta_bound(double eps, const KernelPoint& p, const HurstConfig& cfg) {
    const double m = mu(p.x, p.u1, p.u2, cfg.H);
    return inv_two_pi_pow(cfg.d) * (0.5 * cfg.d + 1.0) * m * m / std::pow(p.u1 * p.u2, 2.0 * cfg.H) *
           std::pow(theta(eps, p, cfg), -0.5 * cfg.d);
}

// Heat kernel p_eps(z) for |z|^2 = r2 in dimension d.
inline double heat_kernel(double eps, double r2, int d) {
    return std::pow(2.0 * std::numbers::pi * eps, -0.5 * d) * std::exp(-0.5 * r2 / eps);
}

// ---------------------------------------------------------------------------
// Combinatorial constants
// ---------------------------------------------------------------------------

inline constexpr int kAlphaExactMax = 20;
inline constexpr int kAlphaDefaultCap = 60;

// Sum over compositions q1+...+qd = q of prod (2q_j)!/(q_j!)^2, exact.
inline boost::multiprecision::cpp_int alpha_q_exact_int(int q, int d) {
    using boost::multiprecision::cpp_int;
    std::vector<cpp_int> central(static_cast<std::size_t>(q + 1));
    central[0] = 1;
    for (int k = 1; k <= q; ++k) central[k] = central[k - 1] * (2 * (2 * k - 1)) / k;
    // conv[m] = sum over compositions of m into the components seen so far.
    std::vector<cpp_int> conv(central);
    for (int comp = 1; comp < d; ++comp) {
        std::vector<cpp_int> next(static_cast<std::size_t>(q + 1));
        for (int m = 0; m <= q; ++m)
            for (int k = 0; k <= m; ++k) next[m] += conv[m - k] * central[k];
        conv.swap(next);
    }
    return conv[q];
}

// log alpha_q by log-Gamma terms combined with log-sum-exp.
inline double log_alpha_q_lgamma(int q, int d) {
    std::vector<double> lc(static_cast<std::size_t>(q + 1));
    for (int k = 0; k <= q; ++k) lc[k] = std::lgamma(2.0 * k + 1.0) - 2.0 * std::lgamma(k + 1.0);
    std::vector<double> conv(lc);
    for (int comp = 1; comp < d; ++comp) {
        std::vector<double> next(static_cast<std::size_t>(q + 1));
        for (int m = 0; m <= q; ++m) {
            double mx = -std::numeric_limits<double>::infinity();
            for (int k = 0; k <= m; ++k) mx = std::max(mx, conv[m - k] + lc[k]);
            double s = 0.0;
            for (int k = 0; k <= m; ++k) s += std::exp(conv[m - k] + lc[k] - mx);
            next[m] = mx + std::log(s);
        }
        conv.swap(next);
    }
    return conv[q];
}

inline double alpha_q(int q, int d, int cap = kAlphaDefaultCap) {
    if (q < 1) throw PreconditionError("alpha_q needs q >= 1");
    if (d < 1) throw PreconditionError("alpha_q needs d >= 1");
    if (q > cap) throw RangeError("alpha_q: q=" + std::to_string(q) + " beyond cap " + std::to_string(cap));
    if (q <= kAlphaExactMax) return alpha_q_exact_int(q, d).convert_to<double>();
    return std::exp(log_alpha_q_lgamma(q, d));
}

inline double beta_q(int q, int d, int cap = kAlphaDefaultCap) {
    if (q < 1) throw PreconditionError("beta_q needs q >= 1");
    if (q > cap) throw RangeError("beta_q: q=" + std::to_string(q) + " beyond cap " + std::to_string(cap));
    const double log_alpha = q <= kAlphaExactMax ? std::log(alpha_q(q, d, cap)) : log_alpha_q_lgamma(q, d);
    return std::exp(log_alpha - d * std::log(2.0 * std::numbers::pi) - 2.0 * q * std::numbers::ln2);
}

// beta_1..beta_Q for dimension d, cached; index 0 is unused.
inline const std::vector<double>& beta_table(int d, int Q) {
    static std::mutex mtx;
    static std::map<int, std::vector<double>> tables;
    std::lock_guard lock(mtx);
    auto& t = tables[d];
    if (t.empty()) t.push_back(0.0);
    while (static_cast<int>(t.size()) <= Q) t.push_back(beta_q(static_cast<int>(t.size()), d));
    return t;
}

struct ChaosSeries {
    double value = 0.0;
    double remainder_bound = 0.0;
    double rho = 0.0;
};

// Partial sum of beta_q G^{(q)} for q = 1..Q with a bound on the omitted tail.
inline ChaosSeries chaos_series_F(double eps, const KernelPoint& p, const HurstConfig& cfg, int Q,
                                  double rho_tol = 1e-12) {
    if (Q < 1) throw PreconditionError("chaos_series_F needs Q >= 1");
    if (!(eps > 0.0)) throw PreconditionError("chaos_series_F needs eps > 0");
    auto k = detail::kernel_parts(eps, p, cfg);
    ChaosSeries out;
    out.rho = k.rho;
    if (k.rho >= 1.0 - rho_tol) throw ConvergenceError("chaos series does not converge: rho >= 1");
    if (k.rho == 0.0) return out;
    const auto& beta = beta_table(cfg.d, Q);
    const double base = std::pow(k.A * k.B, -0.5 * cfg.d);
    double rq = 1.0;
    for (int q = 1; q <= Q; ++q) {
        rq *= k.rho;
        out.value += beta[q] * base * rq;
    }
    // beta_{q+1} G^{(q+1)} / (beta_q G^{(q)}) = rho (d/2 + q) / (q + 1), whose
    // supremum over q > Q is max(1, (d/2 + Q + 1)/(Q + 2)).
    const double next = beta[Q] * base * rq * k.rho * (0.5 * cfg.d + Q) / (Q + 1.0);
    const double ratio = k.rho * std::max(1.0, (0.5 * cfg.d + Q + 1.0) / (Q + 2.0));
    out.remainder_bound = ratio < 1.0 ? next / (1.0 - ratio) : std::numeric_limits<double>::infinity();
    return out;
}

// ---------------------------------------------------------------------------
// Bound predicates: local nondeterminism and mu estimates
// ---------------------------------------------------------------------------

// |Sigma| divided by the lower-bound expression (delta = 1) of the local
// nondeterminism case matching the region index. Case geometry:
//   1: s1 < s2 < t1 < t2, a = s2-s1, b = t1-s2, c = t2-t1
//   2: s1 < s2 < t2 < t1, a = s2-s1, b = t2-s2, c = t1-t2
//   3: s1 < t1 < s2 < t2, a = t1-s1, b = s2-t1, c = t2-s2
inline double lnd_margin(RegionTag region, double a, double b, double c, double H) {
    region.validate();
    if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw PreconditionError("lnd_margin needs strictly ordered times");
    const double h2 = 2.0 * H;
    auto pw = [h2](double v) { return std::pow(v, h2); };
    double v1, v2, m, bound;
    switch (region.index) {
    case 1:
        v1 = pw(a + b);
        v2 = pw(b + c);
        m = mu(a, a + b, b + c, H);
        bound = pw(a + b) * pw(c) + pw(b + c) * pw(a);
        break;
    case 2:
        v1 = pw(a + b + c);
        v2 = pw(b);
        m = mu(a, a + b + c, b, H);
        bound = pw(b) * (pw(a) + pw(c));
        break;
    default:
        v1 = pw(a);
        v2 = pw(c);
        m = mu(a + b, a, c, H);
        bound = pw(a) * pw(c);
        break;
    }
    return (v1 * v2 - m * m) / bound;
}

struct MuBound {
    double lhs = 0.0;   // mu(a+b, a, c)
    double rhs1 = 0.0;  // b^{2H-2} a c
    double rhs2 = 0.0;  // (x+u1+u2)^{2H-2} u1 u2 with x = a+b, u1 = a, u2 = c
    double k1 = 0.0;    // H(2H-1)
    double k2 = 0.0;    // 4^{2H-2} H
};

inline MuBound mu_bound_check(double a, double b, double c, double H) {
    if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw PreconditionError("mu_bound_check needs a, b, c > 0");
    MuBound r;
    r.lhs = mu(a + b, a, c, H);
    r.rhs1 = std::pow(b, 2.0 * H - 2.0) * a * c;
    r.rhs2 = std::pow(2.0 * a + b + c, 2.0 * H - 2.0) * a * c;
    r.k1 = H * (2.0 * H - 1.0);
    r.k2 = std::pow(4.0, 2.0 * H - 2.0) * H;
    return r;
}

// Integrand mu^2 / (u1 u2)^{2H} Theta_1^{-d/p} of the tightness estimate.
inline double tightness_integrand(double p, const KernelPoint& pt, const HurstConfig& cfg) {
    if (pt.u1 == 0.0 || pt.u2 == 0.0) return 0.0;
    const double m = mu(pt.x, pt.u1, pt.u2, cfg.H);
    return m * m / std::pow(pt.u1 * pt.u2, 2.0 * cfg.H) * std::pow(theta(1.0, pt, cfg), -cfg.d / p);
}

} // namespace silt
