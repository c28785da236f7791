#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fbm_core.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace silt {

inline constexpr int kHermiteMaxOrder = 50;

// Probabilists' Hermite polynomial He_q(x).
inline double hermite(int q, double x) {
    if (q < 0 || q > kHermiteMaxOrder) throw PreconditionError("hermite order must lie in [0, 50]");
    if (q == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int k = 1; k < q; ++k) {
        const double next = x * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

struct ChaosSample {
    std::vector<double> values;
    double eps = 0.0;
    double T = 0.0;
    HurstConfig config;
};

namespace detail {

// Trapezoid weight of node k on nodes 0..K, in units of dt.
inline double trap_weight(int k, int K) { return (k == 0 || k == K) ? 0.5 : 1.0; }

// sum_{k,l=0..K} w_k w_l g(|k-l|) for trapezoid weights, divided by dt^2.
template <class G>
double lag_sum(G&& g, int K) {
    if (K <= 0) return 0.0;
    double s = g(0) * (K - 0.5);
    for (int L = 1; L < K; ++L) s += 2.0 * g(L) * (K - L);
    s += 2.0 * g(K) * 0.25;
    return s;
}

inline int exact_lag(const TimeGrid& grid, double length, const char* what) {
    const double r = length / grid.dt();
    const long L = std::lround(r);
    if (std::abs(r - static_cast<double>(L)) > 1e-6 * std::max(1.0, r))
        throw PreconditionError(std::string(what) + ": lag is not a multiple of the grid step");
    return static_cast<int>(L);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Hermite-process approximant
// ---------------------------------------------------------------------------

inline constexpr double kHermiteGridFraction = 0.25;

// eps^{2H-2} int_0^T H_2((B^j_{s+eps} - B^j_s) / eps^H) ds on the path grid.
inline double hermite_process_approx(const FbmPath& path, double eps, double T, int j) {
    const double H = path.config.H;
    if (!(H > 0.75)) throw RegimeError("hermite_process_approx requires H > 3/4");
    if (j < 0 || j >= path.d()) throw PreconditionError("component index out of range");
    const int L = detail::exact_lag(path.grid, eps, "hermite_process_approx");
    if (path.grid.dt() > kHermiteGridFraction * eps * (1.0 + 1e-9))
        throw PreconditionError("hermite_process_approx needs grid step <= eps/4");
    const int K = node_index(path.grid, T);
    if (K + L > path.grid.n) throw PreconditionError("path does not cover [0, T + eps]");
    const double inv = 1.0 / std::pow(eps, 2.0 * H);
    double s = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double z = path(k + L, j) - path(k, j);
        s += detail::trap_weight(k, K) * (z * z * inv - 1.0);
    }
    return std::pow(eps, 2.0 * H - 2.0) * s * path.grid.dt();
}

// E[X_a X_b] of the limit: 2 H^2 (2H-1)^2 int_0^a int_0^b |s1-s2|^{4H-4}.
inline double hermite_limit_covariance(double a, double b, double H) {
    if (!(H > 0.75) || !(H < 1.0)) throw RegimeError("hermite limit requires 3/4 < H < 1");
    const double g = 4.0 * H - 3.0;
    const double box = (std::pow(a, g + 1.0) + std::pow(b, g + 1.0) - std::pow(std::abs(b - a), g + 1.0)) /
                       (g * (g + 1.0));
    return 2.0 * H * H * (2.0 * H - 1.0) * (2.0 * H - 1.0) * box;
}

// Exact E[X^eps_a X^eps_b] of the continuous approximant:
// 2 eps^{-4} int_0^a int_0^b mu(s2 - s1, eps, eps)^2 ds1 ds2.
inline double hermite_approx_covariance(double eps, double a, double b, double H) {
    if (!(eps > 0.0)) throw PreconditionError("eps must be positive");
    auto g = [&](double x) {
        const double len = std::max(0.0, std::min(a, b - x) - std::max(0.0, -x));
        const double m = mu(std::abs(x), eps, eps, H);
        return m * m * len;
    };
    double total = 0.0;
    // the kernel changes character at |x| = eps
    const std::vector<double> cuts = {-a, std::max(-a, -eps), 0.0, std::min(b, eps), b};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i]) total += integrate_1d(g, cuts[i], cuts[i + 1], 1e-12, 1e-300).value;
    return 2.0 * std::pow(eps, -4.0) * total;
}

// Exact second moment of the grid version used by hermite_process_approx.
inline double hermite_approx_discrete_moment(double eps, const TimeGrid& grid, double T, double H) {
    const int K = node_index(grid, T);
    const double dt = grid.dt();
    const double e2h = std::pow(eps, 2.0 * H);
    auto g = [&](int L) {
        const double r = mu(L * dt, eps, eps, H) / e2h;
        return 2.0 * r * r;
    };
    return std::pow(eps, 4.0 * H - 4.0) * detail::lag_sum(g, K) * dt * dt;
}

// ---------------------------------------------------------------------------
// Critical case H = 3/4
// ---------------------------------------------------------------------------

namespace detail {

inline void require_critical(const HurstConfig& cfg, const char* what) {
    if (!is_critical_hurst(cfg.H) || cfg.d < 3) throw RegimeError(std::string(what) + " requires H = 3/4 and d >= 3");
}

// sum_s w_s sum_j (B^j_{s+L} - B^j_s)^2 over s-nodes 0..K, in units of dt.
inline double squared_increment_sum(const FbmPath& path, int K, int L) {
    double s = 0.0;
    for (int k = 0; k <= K; ++k) {
        double r2 = 0.0;
        for (int j = 0; j < path.d(); ++j) {
            const double z = path(k + L, j) - path(k, j);
            r2 += z * z;
        }
        s += trap_weight(k, K) * r2;
    }
    return s;
}

inline double critical_weight(double u, int d) { return std::pow(u, 1.5) * std::pow(1.0 + std::pow(u, 1.5), -0.5 * d - 1.0); }

} // namespace detail

// Default truncation of the lag variable in j_tilde.
inline double j_tilde_default_umax(double eps, double T) { return std::pow(eps, -2.0 / 3.0) * T; }

// Discretized J~_T^eps. The lag variable u is sampled at grid lags
// eps^{2/3} u = L dt, L = 1..L_max with u_max = L_max dt / eps^{2/3}; the
// path must cover [0, T + eps^{2/3} u_max].
inline double j_tilde(const FbmPath& path, double eps, double T, double u_max = -1.0) {
    const HurstConfig& cfg = path.config;
    detail::require_critical(cfg, "j_tilde");
    if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("j_tilde needs 0 < eps < 1");
    if (u_max <= 0.0) u_max = j_tilde_default_umax(eps, T);
    const double dt = path.grid.dt();
    const double scale = std::pow(eps, 2.0 / 3.0);
    const int K = node_index(path.grid, T);
    const int Lmax = static_cast<int>(std::lround(u_max * scale / dt));
    if (Lmax < 1) throw PreconditionError("j_tilde: u_max below one grid step");
    if (K + Lmax > path.grid.n) throw PreconditionError("j_tilde: path does not cover [0, T + eps^{2/3} u_max]");
    const int d = cfg.d;
    const double du = dt / scale;
    double acc = 0.0;
    for (int L = 1; L <= Lmax; ++L) {
        const double u = L * du;
        const double S = detail::squared_increment_sum(path, K, L);
        // sum_j H_2(z_j) with z_j = increment / (sqrt(eps) u^{3/4})
        const double h2 = S / (eps * std::pow(u, 1.5)) - d * K;
        acc += (L == Lmax ? 0.5 : 1.0) * detail::critical_weight(u, d) * h2;
    }
    const double c_log = 0.5 * inv_two_pi_pow(0.5 * d);
    return -c_log * std::pow(eps, 2.0 / 3.0 - 0.5 * d) * acc * du * dt;
}

// Riemann-sum functional R_{T,M}^eps over u(k) = k / 2^M, k = 2..M 2^M.
// Each lag eps^{2/3} u(k) snaps to the nearest grid lag (at least one step);
// the snapped u normalizes the Hermite argument so every term stays centered.
inline double riemann_log_chaos(const FbmPath& path, double eps, double T, int M) {
    const HurstConfig& cfg = path.config;
    detail::require_critical(cfg, "riemann_log_chaos");
    if (M < 1 || M > 20) throw PreconditionError("riemann_log_chaos needs 1 <= M <= 20");
    if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("riemann_log_chaos needs 0 < eps < 1");
    const double dt = path.grid.dt();
    const double scale = std::pow(eps, 2.0 / 3.0);
    const int K = node_index(path.grid, T);
    const double step = std::ldexp(1.0, -M);
    const long kmax = static_cast<long>(M) << M;
    const int Ltop = std::max(1, static_cast<int>(std::lround(scale * kmax * step / dt)));
    if (K + Ltop > path.grid.n) throw PreconditionError("riemann_log_chaos: eps^{2/3} M exceeds the path grid");
    const int d = cfg.d;
    std::map<int, double> cache;
    double acc = 0.0;
    for (long k = 2; k <= kmax; ++k) {
        const double u = k * step;
        const int L = std::max(1, static_cast<int>(std::lround(scale * u / dt)));
        auto it = cache.find(L);
        if (it == cache.end()) it = cache.emplace(L, detail::squared_increment_sum(path, K, L)).first;
        const double u_snap = L * dt / scale;
        const double h2 = it->second / (eps * std::pow(u_snap, 1.5)) - d * K;
        acc += detail::critical_weight(u, d) * h2;
    }
    const double c_log = 0.5 * inv_two_pi_pow(0.5 * d);
    return -c_log * std::pow(eps, 2.0 / 3.0 - 0.5 * d) * step * acc * dt;
}

// Closed-form rho~_M: the Riemann sum of the rho integrand over u(k) = k/2^M.
inline double rho_tilde_M(int M, int d) {
    if (d < 3) throw RegimeError("rho_tilde_M requires d >= 3");
    if (M < 1 || M > 24) throw PreconditionError("rho_tilde_M needs 1 <= M <= 24");
    const double step = std::ldexp(1.0, -M);
    const long kmax = static_cast<long>(M) << M;
    double s = 0.0;
    for (long k = 2; k <= kmax; ++k) {
        const double u = k * step;
        s += u * u * std::pow(1.0 + std::pow(u, 1.5), -0.5 * d - 1.0);
    }
    const double pref = std::sqrt(3.0 * d) / (std::pow(2.0, 0.5 * (d + 5)) * std::pow(std::numbers::pi, 0.5 * d));
    return pref * step * s;
}

// ---------------------------------------------------------------------------
// Monte Carlo drivers
// ---------------------------------------------------------------------------

// Hermite approximant at horizons Ts for every component of every replicate;
// values[h] holds replicates * d samples in (replicate, component) order.
struct HermiteSample {
    double eps = 0.0;
    std::vector<double> T_list;
    TimeGrid grid;
    std::vector<std::vector<double>> values;
};

inline HermiteSample run_hermite_approx(const HurstConfig& cfg, double eps, const std::vector<double>& Ts,
                                        int replicates, std::uint64_t base_seed, unsigned threads = 0,
                                        Backend backend = Backend::Auto) {
    cfg.validate();
    if (!(cfg.H > 0.75)) throw RegimeError("hermite approximant requires H > 3/4");
    if (replicates < 2) throw ConfigError("replicates must be at least 2");
    if (Ts.empty()) throw ConfigError("no horizons");
    const double Tmax = *std::max_element(Ts.begin(), Ts.end());
    // grid step eps/4 on [0, Tmax + eps]
    const double dt = kHermiteGridFraction * eps;
    const long Kmax = std::lround(Tmax / dt);
    if (std::abs(Kmax * dt - Tmax) > 1e-9 * Tmax) throw ConfigError("horizons must be multiples of eps/4");
    const long n = Kmax + 4;
    if (n > 50'000'000) throw ConfigError("hermite grid too large");
    TimeGrid grid{n * dt, static_cast<int>(n)};
    SamplerOptions opts;
    opts.backend = backend;
    FbmSampler sampler(grid, cfg, opts);
    HermiteSample out;
    out.eps = eps;
    out.T_list = Ts;
    out.grid = grid;
    const std::size_t R = static_cast<std::size_t>(replicates);
    const int d = cfg.d;
    std::vector<std::vector<double>> slots(R);
    parallel_for(R, resolve_threads(threads), [&](std::size_t r) {
        FbmPath p = sampler.sample(replicate_seed(base_seed, r));
        auto& v = slots[r];
        v.resize(Ts.size() * d);
        for (std::size_t h = 0; h < Ts.size(); ++h)
            for (int j = 0; j < d; ++j) v[h * d + j] = hermite_process_approx(p, eps, Ts[h], j);
    });
    out.values.assign(Ts.size(), {});
    for (std::size_t h = 0; h < Ts.size(); ++h) {
        out.values[h].reserve(R * d);
        for (std::size_t r = 0; r < R; ++r)
            for (int j = 0; j < d; ++j) out.values[h].push_back(slots[r][h * d + j]);
    }
    return out;
}

} // namespace silt
