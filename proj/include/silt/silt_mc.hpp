#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
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

struct MonteCarloConfig {
    int replicates = 4000;
    std::uint64_t base_seed = 20240601;
    std::vector<double> eps_list{0.1, 0.05, 0.02};
    int steps_per_unit = 512;
    // Largest admissible grid step as a multiple of eps^{1/(2H)}.
    double coupling = 0.25;
    unsigned threads = 0;
    Backend backend = Backend::Auto;

    void validate() const {
        if (replicates < 2) throw ConfigError("replicates must be at least 2");
        if (eps_list.empty()) throw ConfigError("eps_list is empty");
        for (std::size_t i = 0; i < eps_list.size(); ++i) {
            if (!(eps_list[i] > 0.0)) throw ConfigError("eps values must be positive");
            if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ConfigError("eps_list must be strictly decreasing");
        }
        if (steps_per_unit < 1) throw ConfigError("steps_per_unit must be positive");
        if (!(coupling > 0.0)) throw ConfigError("coupling must be positive");
    }
};

// Grid covering [0, T] with the configured resolution.
inline TimeGrid mc_grid(const MonteCarloConfig& mc, double T) {
    const long n = std::lround(mc.steps_per_unit * T);
    if (n < 1) throw ConfigError("grid has no steps");
    return TimeGrid{T, static_cast<int>(n)};
}

// Largest grid step allowed at eps under the coupling dt <= c eps^{1/(2H)}.
inline double coupled_step(double eps, double H, double coupling) { return coupling * std::pow(eps, 0.5 / H); }

// ---------------------------------------------------------------------------
// Path functionals
// ---------------------------------------------------------------------------

// Discretized I_T^eps and its second-chaos projection J_2 for several eps
// and horizons from a single O(n^2) sweep over node pairs.
//
// The triangle integral is the trapezoid rule on [0,T]^2 halved; pairs l < k
// carry weight w_k w_l and the diagonal uses p_eps(0). Row sums
// A_k = sum_{l<k} v_l f(k,l), with v_0 = dt/2 and v_l = dt otherwise, give every
// horizon K in O(1): I_K = dt sum_{k<K} A_k + dt/2 A_K + diag(K).
struct PathFunctionals {
    // [eps][horizon]
    std::vector<std::vector<double>> I;
    std::vector<std::vector<double>> J2;
};

class SiltFunctional {
public:
    SiltFunctional(TimeGrid grid, HurstConfig cfg, std::vector<double> eps_list, std::vector<int> horizon_nodes,
                   bool with_j2)
        : grid_(grid), cfg_(cfg), eps_(std::move(eps_list)), nodes_(std::move(horizon_nodes)), with_j2_(with_j2) {
        for (double e : eps_)
            if (!(e > 0.0)) throw PreconditionError("eps must be positive");
        kmax_ = 0;
        for (int K : nodes_) {
            if (K < 0 || K > grid_.n) throw PreconditionError("horizon beyond the path grid");
            kmax_ = std::max(kmax_, K);
        }
        const double dt = grid_.dt();
        const double c = inv_two_pi_pow(0.5 * cfg_.d);
        if (with_j2_) {
            c2_.assign(eps_.size(), std::vector<double>(static_cast<std::size_t>(kmax_) + 1, 0.0));
            var_.assign(static_cast<std::size_t>(kmax_) + 1, 0.0);
            for (int L = 1; L <= kmax_; ++L) var_[L] = std::pow(L * dt, 2.0 * cfg_.H);
            for (std::size_t e = 0; e < eps_.size(); ++e)
                for (int L = 1; L <= kmax_; ++L)
                    c2_[e][L] = -0.5 * c * std::pow(eps_[e] + var_[L], -0.5 * cfg_.d - 1.0);
        }
    }

    const std::vector<double>& eps_list() const { return eps_; }
    const std::vector<int>& horizon_nodes() const { return nodes_; }

    // Scratch buffers are per call so one functional serves many threads.
    PathFunctionals evaluate(const FbmPath& path) const {
        if (path.grid.n < kmax_ || path.d() != cfg_.d) throw PreconditionError("path does not cover the horizons");
        const int d = cfg_.d;
        const int K = kmax_;
        const double dt = grid_.dt();
        const std::size_t ne = eps_.size();
        // component-major copy for contiguous inner loops
        std::vector<double> comp(static_cast<std::size_t>(d) * (K + 1));
        for (int k = 0; k <= K; ++k)
            for (int j = 0; j < d; ++j) comp[static_cast<std::size_t>(j) * (K + 1) + k] = path(k, j);
        std::vector<double> r2(static_cast<std::size_t>(K) + 1);
        std::vector<double> rowI(ne * (K + 1), 0.0), rowJ(with_j2_ ? ne * (K + 1) : 0, 0.0);
        std::vector<double> inv2e(ne), norm(ne);
        for (std::size_t e = 0; e < ne; ++e) {
            inv2e[e] = -0.5 / eps_[e];
            norm[e] = std::pow(2.0 * std::numbers::pi * eps_[e], -0.5 * d);
        }
        for (int k = 1; k <= K; ++k) {
            std::fill(r2.begin(), r2.begin() + k, 0.0);
            for (int j = 0; j < d; ++j) {
                const double* b = comp.data() + static_cast<std::size_t>(j) * (K + 1);
                const double bk = b[k];
                for (int l = 0; l < k; ++l) {
                    const double z = bk - b[l];
                    r2[l] += z * z;
                }
            }
            for (std::size_t e = 0; e < ne; ++e) {
                double s = 0.5 * std::exp(inv2e[e] * r2[0]);
                for (int l = 1; l < k; ++l) s += std::exp(inv2e[e] * r2[l]);
                rowI[e * (K + 1) + k] = s * dt * norm[e];
                if (with_j2_) {
                    const auto& c2 = c2_[e];
                    double t = 0.5 * c2[k] * (r2[0] - d * var_[k]);
                    for (int l = 1; l < k; ++l) t += c2[k - l] * (r2[l] - d * var_[k - l]);
                    rowJ[e * (K + 1) + k] = t * dt;
                }
            }
        }
        PathFunctionals out;
        out.I.assign(ne, std::vector<double>(nodes_.size(), 0.0));
        if (with_j2_) out.J2.assign(ne, std::vector<double>(nodes_.size(), 0.0));
        for (std::size_t e = 0; e < ne; ++e) {
            const double p0 = norm[e];
            for (std::size_t h = 0; h < nodes_.size(); ++h) {
                const int Kh = nodes_[h];
                if (Kh == 0) continue;
                double sI = 0.0, sJ = 0.0;
                for (int k = 1; k < Kh; ++k) {
                    sI += rowI[e * (K + 1) + k];
                    if (with_j2_) sJ += rowJ[e * (K + 1) + k];
                }
                sI = dt * sI + 0.5 * dt * rowI[e * (K + 1) + Kh];
                const double diag = 0.5 * p0 * dt * dt * (Kh - 0.5);
                out.I[e][h] = sI + diag;
                if (with_j2_) out.J2[e][h] = dt * sJ + 0.5 * dt * rowJ[e * (K + 1) + Kh];
            }
        }
        return out;
    }

private:
    TimeGrid grid_;
    HurstConfig cfg_;
    std::vector<double> eps_;
    std::vector<int> nodes_;
    bool with_j2_;
    int kmax_ = 0;
    std::vector<std::vector<double>> c2_;
    std::vector<double> var_;
};

// Trapezoid estimate of int_0^T int_0^t p_eps(B_t - B_s) ds dt on the path grid.
inline double silt_estimate(const FbmPath& path, double eps, double T) {
    if (!(eps > 0.0)) throw PreconditionError("silt_estimate needs eps > 0");
    const int K = node_index(path.grid, T);
    SiltFunctional f(path.grid, path.config, {eps}, {K}, false);
    return f.evaluate(path).I[0][0];
}

// Second-chaos projection J_2(I_T^eps) of the same discretization.
inline double second_chaos_J2(const FbmPath& path, double eps, double T) {
    if (!(eps > 0.0)) throw PreconditionError("second_chaos_J2 needs eps > 0");
    const int K = node_index(path.grid, T);
    SiltFunctional f(path.grid, path.config, {eps}, {K}, true);
    return f.evaluate(path).J2[0][0];
}

// ---------------------------------------------------------------------------
// Exact moments
// ---------------------------------------------------------------------------

// E[I_T^eps] = (2pi)^{-d/2} int_0^T (T-u) (eps + u^{2H})^{-d/2} du.
inline double expected_silt(double eps, double T, const HurstConfig& cfg) {
    if (!(eps > 0.0)) throw PreconditionError("expected_silt needs eps > 0");
    if (!(T > 0.0)) return 0.0;
    auto f = [&](double u) { return (T - u) * std::pow(eps + std::pow(u, 2.0 * cfg.H), -0.5 * cfg.d); };
    // Split near the scale eps^{1/2H} where the integrand bends.
    const double s = std::min(T, std::pow(eps, 0.5 / cfg.H));
    QuadResult a = integrate_1d(f, 0.0, s, 1e-13, 1e-300);
    QuadResult b = integrate_1d(f, s, T, 1e-13, 1e-300);
    return inv_two_pi_pow(0.5 * cfg.d) * (a.value + b.value);
}

// Exact mean of the trapezoid estimator on grid nodes 0..K.
inline double expected_silt_discrete(double eps, const TimeGrid& grid, int K, const HurstConfig& cfg) {
    if (K <= 0) return 0.0;
    const double dt = grid.dt();
    auto m = [&](int L) { return expected_heat_kernel(eps, L * dt, cfg); };
    double s = 0.5 * m(0) * (K - 0.5);
    for (int L = 1; L < K; ++L) s += m(L) * (K - L);
    s += 0.25 * m(K);
    return s * dt * dt;
}

namespace detail {

// Integral over K_{0,T1} x K_{0,T2} of kernel(x, u1, u2), where (s_i, t_i)
// range over {0 <= s_i <= t_i <= T_i}, x = s2 - s1 and u_i = t_i - s_i.
// Translation invariance leaves the overlap length of admissible s1 as a
// weight. The kernel sees x >= 0 only; x < 0 is reflected to (-x, u2, u1).
// Each axis uses u = s v/(1-v) with s = eps^{1/2H}, the scale of the kernel.
template <class K>
QuadResult pair_integral(K&& kernel, double eps, double T1, double T2, const HurstConfig& cfg, const QuadSpec& spec) {
    QuadResult total;
    total.converged = true;
    if (!(T1 > 0.0) || !(T2 > 0.0)) return total;
    const double s = std::pow(eps, 0.5 / cfg.H);
    auto vmax = [s](double R) { return R / (s + R); };
    auto map = [s](double v, double& jac) {
        const double w = 1.0 - v;
        jac = s / (w * w);
        return s * v / w;
    };
    for (int side = 0; side < 2; ++side) {
        // side 0: x >= 0; side 1: x < 0 with y = -x.
        auto f = [&](const std::array<double, 3>& v) {
            double j1, j2, jx;
            const double u1 = map(v[0], j1);
            const double u2 = map(v[1], j2);
            const double X = side == 0 ? T2 - u2 : T1 - u1;
            if (!(X > 0.0)) return 0.0;
            const double vm = vmax(X);
            const double y = map(v[2] * vm, jx);
            jx *= vm;
            double L;
            if (side == 0) L = std::min(T1 - u1, T2 - u2 - y);
            else L = std::min(T1 - u1 - y, T2 - u2);
            if (!(L > 0.0)) return 0.0;
            const double k = side == 0 ? kernel(y, u1, u2) : kernel(y, u2, u1);
            return k * L * j1 * j2 * jx;
        };
        QuadSpec sp = spec;
        QuadResult part = cubature<3>(f, {0.0, 0.0, 0.0}, {vmax(T1), vmax(T2), 1.0}, sp.rel_tol, sp.abs_tol,
                                      sp.max_evals, sp.threads);
        total += part;
    }
    return total;
}

} // namespace detail

// Cov[I_{T1}^eps, I_{T2}^eps] by cubature of F.
inline QuadResult silt_covariance(double eps, double T1, double T2, const HurstConfig& cfg, const QuadSpec& spec = {}) {
    if (!(eps > 0.0)) throw PreconditionError("silt_covariance needs eps > 0");
    if (T1 < 0.0 || T2 < 0.0) throw PreconditionError("horizons must be nonnegative");
    auto k = [&](double x, double u1, double u2) { return F_kernel(eps, {x, u1, u2}, cfg); };
    return detail::pair_integral(k, eps, T1, T2, cfg, spec);
}

// E[(I_T^eps)^2] from the product moment (2pi)^{-d} Theta_eps^{-d/2}.
inline QuadResult silt_second_moment(double eps, double T, const HurstConfig& cfg, const QuadSpec& spec = {}) {
    if (!(eps > 0.0)) throw PreconditionError("silt_second_moment needs eps > 0");
    auto k = [&](double x, double u1, double u2) { return product_moment(eps, x, u1, u2, cfg); };
    return detail::pair_integral(k, eps, T, T, cfg, spec);
}

// Cov[J_2(I_{T1}^eps), J_2(I_{T2}^eps)] = beta_1 times the integral of G^{(1)}.
inline QuadResult j2_covariance(double eps, double T1, double T2, const HurstConfig& cfg, const QuadSpec& spec = {}) {
    if (!(eps > 0.0)) throw PreconditionError("j2_covariance needs eps > 0");
    const double b1 = beta_q(1, cfg.d);
    auto k = [&](double x, double u1, double u2) { return b1 * G_kernel(1, eps, {x, u1, u2}, cfg); };
    return detail::pair_integral(k, eps, T1, T2, cfg, spec);
}

// ---------------------------------------------------------------------------
// Rescaling
// ---------------------------------------------------------------------------

inline double rescale_factor(double eps, const HurstConfig& cfg) {
    switch (classify_regime(cfg)) {
    case Regime::Subcritical: return std::pow(eps, 0.5 * cfg.d - 0.75 / cfg.H);
    case Regime::Supercritical: return std::pow(eps, 0.5 * cfg.d - 1.5 / cfg.H + 1.0);
    case Regime::Critical:
        if (!(eps < 1.0)) throw PreconditionError("critical rescaling needs eps < 1");
        return std::pow(eps, 0.5 * cfg.d - 1.0) / std::sqrt(std::log(1.0 / eps));
    default:
        throw RegimeError("no limit theorem rescaling for regime " + std::string(regime_name(classify_regime(cfg))));
    }
}

// factor * (value - mean) with an explicit centering value.
inline std::vector<double> rescale_centered(const std::vector<double>& values, double eps, const HurstConfig& cfg,
                                            double mean) {
    const double f = rescale_factor(eps, cfg);
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = f * (values[i] - mean);
    return out;
}

// Centers at expected_silt(eps, T).
inline std::vector<double> rescale(const std::vector<double>& values, double eps, const HurstConfig& cfg, double T) {
    return rescale_centered(values, eps, cfg, expected_silt(eps, T, cfg));
}

// ---------------------------------------------------------------------------
// Monte Carlo over replicates
// ---------------------------------------------------------------------------

struct SiltSample {
    std::vector<double> eps_list;
    std::vector<double> T_list;
    TimeGrid grid;
    std::uint64_t base_seed = 0;
    int replicates = 0;
    // [eps][horizon][replicate]
    std::vector<std::vector<std::vector<double>>> values;
    std::vector<std::vector<std::vector<double>>> j2; // empty unless requested
    std::vector<std::string> notes;

    const std::vector<double>& at(std::size_t e, std::size_t h) const { return values[e][h]; }
};

inline SiltSample run_silt(const HurstConfig& cfg, const MonteCarloConfig& mc, const std::vector<double>& horizons,
                           bool with_j2 = false) {
    cfg.validate();
    mc.validate();
    if (horizons.empty()) throw ConfigError("no horizons");
    const double Tmax = *std::max_element(horizons.begin(), horizons.end());
    TimeGrid grid = mc_grid(mc, Tmax);
    std::vector<int> nodes;
    for (double T : horizons) nodes.push_back(node_index(grid, T));

    SiltSample out;
    out.eps_list = mc.eps_list;
    out.T_list = horizons;
    out.grid = grid;
    out.base_seed = mc.base_seed;
    out.replicates = mc.replicates;
    for (double e : mc.eps_list) {
        const double lim = coupled_step(e, cfg.H, mc.coupling);
        if (grid.dt() > lim * (1.0 + 1e-12))
            out.notes.push_back("grid step " + std::to_string(grid.dt()) + " exceeds coupling bound " +
                                std::to_string(lim) + " at eps=" + std::to_string(e));
    }

    SamplerOptions opts;
    opts.backend = mc.backend;
    FbmSampler sampler(grid, cfg, opts);
    SiltFunctional fun(grid, cfg, mc.eps_list, nodes, with_j2);
    const std::size_t R = static_cast<std::size_t>(mc.replicates);
    std::vector<PathFunctionals> slots(R);
    parallel_for(R, resolve_threads(mc.threads), [&](std::size_t r) {
        FbmPath path = sampler.sample(replicate_seed(mc.base_seed, r));
        slots[r] = fun.evaluate(path);
    });
    const std::size_t ne = mc.eps_list.size(), nh = horizons.size();
    out.values.assign(ne, std::vector<std::vector<double>>(nh, std::vector<double>(R)));
    if (with_j2) out.j2.assign(ne, std::vector<std::vector<double>>(nh, std::vector<double>(R)));
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t e = 0; e < ne; ++e)
            for (std::size_t h = 0; h < nh; ++h) {
                out.values[e][h][r] = slots[r].I[e][h];
                if (with_j2) out.j2[e][h][r] = slots[r].J2[e][h];
            }
    return out;
}

} // namespace silt
