#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <fftw3.h>

#include "errors.hpp"
#include "rng.hpp"

namespace silt {

// ---------------------------------------------------------------------------
// Hurst configuration and regime classification
// ---------------------------------------------------------------------------

enum class Regime { L2, L2Centered, Subcritical, Critical, Supercritical, Unsupported };

inline std::string_view regime_name(Regime r) {
    switch (r) {
    case Regime::L2: return "L2";
    case Regime::L2Centered: return "L2-CENTERED";
    case Regime::Subcritical: return "SUBCRITICAL";
    case Regime::Critical: return "CRITICAL";
    case Regime::Supercritical: return "SUPERCRITICAL";
    case Regime::Unsupported: return "UNSUPPORTED";
    }
    return "UNSUPPORTED";
}

// Tolerance used to decide H == 3/4 and H == 3/(2d).
inline constexpr double kBoundaryTol = 1e-12;

struct HurstConfig {
    double H = 0.5;
    int d = 1;

    void validate() const {
        if (!(H > 0.0 && H < 1.0)) throw PreconditionError("Hurst parameter must lie in (0,1)");
        if (d < 1) throw PreconditionError("dimension must be >= 1");
    }
};

inline bool is_critical_hurst(double H) { return std::abs(H - 0.75) <= kBoundaryTol; }

inline Regime classify_regime(const HurstConfig& cfg) {
    cfg.validate();
    const double H = cfg.H;
    const double d = cfg.d;
    const double lower = 3.0 / (2.0 * d);
    if (std::abs(H - lower) <= kBoundaryTol) return Regime::Unsupported;
    if (H < 1.0 / d) return Regime::L2;
    if (H < lower) return Regime::L2Centered;
    if (is_critical_hurst(H)) return cfg.d >= 3 ? Regime::Critical : Regime::Unsupported;
    if (H < 0.75) return Regime::Subcritical;
    return Regime::Supercritical;
}

inline void require_regime(const HurstConfig& cfg, Regime want, std::string_view what) {
    Regime got = classify_regime(cfg);
    if (got != want) {
        throw RegimeError(std::string(what) + " requires regime " + std::string(regime_name(want)) +
                          ", got " + std::string(regime_name(got)));
    }
}

// ---------------------------------------------------------------------------
// Time grid and paths
// ---------------------------------------------------------------------------

struct TimeGrid {
    double T = 1.0;
    int n = 1;

    double dt() const { return T / n; }
    double t(int k) const { return k == n ? T : k * dt(); }

    void validate() const {
        if (!(T > 0.0) || !std::isfinite(T)) throw PreconditionError("grid horizon must be positive");
        if (n < 1) throw PreconditionError("grid needs at least one step");
    }
};

// Index of the grid node at time t; t must coincide with a node.
inline int node_index(const TimeGrid& grid, double t) {
    if (t < 0.0) throw PreconditionError("negative horizon");
    double k = t / grid.dt();
    long r = std::lround(k);
    if (std::abs(k - static_cast<double>(r)) > 1e-7 * std::max(1.0, k))
        throw PreconditionError("horizon " + std::to_string(t) + " is not a grid node");
    if (r > grid.n) throw PreconditionError("horizon " + std::to_string(t) + " beyond the path grid");
    return static_cast<int>(r);
}

struct FbmPath {
    TimeGrid grid;
    HurstConfig config;
    // (n+1) x d, row major; row 0 is the origin.
    std::vector<double> values;

    FbmPath() = default;
    FbmPath(TimeGrid g, HurstConfig c)
        : grid(g), config(c), values(static_cast<std::size_t>(g.n + 1) * c.d, 0.0) {}

    int d() const { return config.d; }
    double operator()(int k, int j) const { return values[static_cast<std::size_t>(k) * config.d + j]; }
    double& operator()(int k, int j) { return values[static_cast<std::size_t>(k) * config.d + j]; }
    const double* row(int k) const { return values.data() + static_cast<std::size_t>(k) * config.d; }
};

// ---------------------------------------------------------------------------
// Closed-form covariance structure
// ---------------------------------------------------------------------------

inline double fbm_covariance(double t, double s, double H) {
    const double h2 = 2.0 * H;
    return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

inline double fbm_covariance(double t, double s, const HurstConfig& cfg) { return fbm_covariance(t, s, cfg.H); }

namespace detail {

// (y + a)^{2H} - y^{2H} for y, a >= 0 without cancellation.
inline double pow_step(double y, double a, double h2) {
    if (a == 0.0) return 0.0;
    if (y == 0.0) return std::pow(a, h2);
    return std::pow(y, h2) * std::expm1(h2 * std::log1p(a / y));
}

// Intervals of lengths L <= M separated by a gap y0 >= 4L. The second
// difference cancels there, so integrate the longer interval in closed form
// and the shorter one by Gauss-Legendre:
//   mu = H int_{y0}^{y0+L} ((y+M)^{2H-1} - y^{2H-1}) dy.
inline double mu_far(double y0, double L, double M, double H) {
    const double h1 = 2.0 * H - 1.0;
    auto g = [&](double y) { return std::pow(y, h1) * std::expm1(h1 * std::log1p(M / y)); };
    return H * boost::math::quadrature::gauss<double, 10>::integrate(g, y0, y0 + L);
}

} // namespace detail

// E[B_{u1} (B_{x+u2} - B_x)] for one fBm component.
inline double mu(double x, double u1, double u2, double H) {
    if (x < 0.0) return mu(-x, u2, u1, H);
    const double h2 = 2.0 * H;
    if (u1 == 0.0 || u2 == 0.0) return 0.0;
    if (x >= u1) {
        // Disjoint intervals.
        if (std::min(u1, u2) <= 0.25 * (x - u1)) return detail::mu_far(x - u1, std::min(u1, u2), std::max(u1, u2), H);
        // Two exact forms; keep the one whose terms cancel least.
        const double a1 = detail::pow_step(x, u2, h2), a2 = detail::pow_step(x - u1, u2, h2);
        const double b1 = detail::pow_step(x - u1 + u2, u1, h2), b2 = detail::pow_step(x - u1, u1, h2);
        const double ca = std::abs(a1 - a2) / std::max(std::abs(a1), std::abs(a2));
        const double cb = std::abs(b1 - b2) / std::max(std::abs(b1), std::abs(b2));
        return 0.5 * (ca >= cb ? a1 - a2 : b1 - b2);
    }
    if (x + u2 <= u1) {
        // [x, x+u2] nested inside [0, u1].
        return 0.5 * (detail::pow_step(x, u2, h2) + detail::pow_step(u1 - x - u2, u2, h2));
    }
    return 0.5 * (std::pow(x + u2, h2) - std::pow(x + u2 - u1, h2) - std::pow(x, h2) + std::pow(u1 - x, h2));
}

// E[(B_{t1}-B_{s1})(B_{t2}-B_{s2})] for one component.
inline double increment_covariance(double s1, double t1, double s2, double t2, double H) {
    return mu(s2 - s1, t1 - s1, t2 - s2, H);
}

// Autocovariance of unit-step fractional Gaussian noise at lag k.
inline double fgn_autocovariance(long k, double H) {
    const double h2 = 2.0 * H;
    const double a = std::abs(static_cast<double>(k));
    if (a == 0.0) return 1.0;
    return 0.5 * (std::pow(a + 1.0, h2) - 2.0 * std::pow(a, h2) + std::pow(a - 1.0, h2));
}

// ---------------------------------------------------------------------------
// Exact samplers of fractional Gaussian noise
// ---------------------------------------------------------------------------

enum class Backend { Auto, Cholesky, Circulant };

inline std::string_view backend_name(Backend b) {
    switch (b) {
    case Backend::Auto: return "auto";
    case Backend::Cholesky: return "cholesky";
    case Backend::Circulant: return "circulant";
    }
    return "auto";
}

struct SamplerOptions {
    Backend backend = Backend::Auto;
    int cholesky_max_n = 4096;
    // Eigenvalues below -spectrum_tol * max eigenvalue are rejected; the
    // remaining round-off negatives are set to zero.
    double spectrum_tol = 1e-10;
};

// Generates increments of one fBm component over a uniform grid.
class FgnGenerator {
public:
    virtual ~FgnGenerator() = default;
    virtual int size() const = 0;
    virtual Backend backend() const = 0;
    // One vector of n increments.
    virtual void generate(Engine& eng, double* out) const = 0;
    // Two independent vectors of n increments.
    virtual void generate_pair(Engine& eng, double* a, double* b) const {
        generate(eng, a);
        generate(eng, b);
    }
};

class CholeskyFgn final : public FgnGenerator {
public:
    CholeskyFgn(int n, double dt, double H) : n_(n) {
        Eigen::MatrixXd cov(n, n);
        const double scale = std::pow(dt, 2.0 * H);
        std::vector<double> gamma(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) gamma[k] = scale * fgn_autocovariance(k, H);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) cov(i, j) = gamma[static_cast<std::size_t>(std::abs(i - j))];
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) throw DomainError("increment covariance is not positive definite");
        lower_ = llt.matrixL();
    }

    int size() const override { return n_; }
    Backend backend() const override { return Backend::Cholesky; }

    void generate(Engine& eng, double* out) const override {
        NormalDist normal;
        Eigen::VectorXd z(n_);
        for (int i = 0; i < n_; ++i) z[i] = normal(eng);
        Eigen::Map<Eigen::VectorXd> res(out, n_);
        res.noalias() = lower_.triangularView<Eigen::Lower>() * z;
    }

    const Eigen::MatrixXd& factor() const { return lower_; }

private:
    int n_;
    Eigen::MatrixXd lower_;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Smallest integer >= n whose prime factors are all in {2,3,5,7}.
inline long smooth_size(long n) {
    for (long m = std::max(1L, n);; ++m) {
        long r = m;
        for (long p : {2L, 3L, 5L, 7L})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

} // namespace detail

// Circulant embedding of the fGn covariance (Davies-Harte).
class CirculantFgn final : public FgnGenerator {
public:
    CirculantFgn(int n, double dt, double H, double spectrum_tol = 1e-10) : n_(n) {
        half_ = detail::smooth_size(std::max<long>(n, 2));
        m_ = 2 * half_;
        const double scale = std::pow(dt, 2.0 * H);
        std::unique_ptr<fftw_complex, detail::FftwFree> buf(
            static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(m_))));
        for (long j = 0; j < m_; ++j) {
            long lag = j <= half_ ? j : m_ - j;
            buf.get()[j][0] = scale * fgn_autocovariance(lag, H);
            buf.get()[j][1] = 0.0;
        }
        {
            std::lock_guard lock(detail::fftw_planner_mutex());
            plan_ = fftw_plan_dft_1d(static_cast<int>(m_), buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE);
        }
        fftw_execute(plan_);
        double lmax = 0.0;
        for (long k = 0; k < m_; ++k) lmax = std::max(lmax, buf.get()[k][0]);
        amp_.resize(static_cast<std::size_t>(m_));
        min_eigen_ = lmax;
        for (long k = 0; k < m_; ++k) {
            double lam = buf.get()[k][0];
            min_eigen_ = std::min(min_eigen_, lam);
            if (lam < -spectrum_tol * lmax) {
                destroy();
                throw EmbeddingError("circulant embedding has a negative eigenvalue " + std::to_string(lam));
            }
            amp_[static_cast<std::size_t>(k)] = std::sqrt(std::max(lam, 0.0) / static_cast<double>(m_));
        }
    }

    ~CirculantFgn() override { destroy(); }
    CirculantFgn(const CirculantFgn&) = delete;
    CirculantFgn& operator=(const CirculantFgn&) = delete;

    int size() const override { return n_; }
    Backend backend() const override { return Backend::Circulant; }
    long embedding_size() const { return m_; }
    double min_eigenvalue() const { return min_eigen_; }

    void generate(Engine& eng, double* out) const override { run(eng, out, nullptr); }
    void generate_pair(Engine& eng, double* a, double* b) const override { run(eng, a, b); }

private:
    void run(Engine& eng, double* re, double* im) const {
        NormalDist normal;
        std::unique_ptr<fftw_complex, detail::FftwFree> buf(
            static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(m_))));
        fftw_complex* w = buf.get();
        for (long k = 0; k < m_; ++k) {
            const double a = amp_[static_cast<std::size_t>(k)];
            w[k][0] = a * normal(eng);
            w[k][1] = a * normal(eng);
        }
        fftw_execute_dft(plan_, w, w);
        for (int j = 0; j < n_; ++j) re[j] = w[j][0];
        if (im)
            for (int j = 0; j < n_; ++j) im[j] = w[j][1];
    }

    void destroy() {
        if (plan_) {
            std::lock_guard lock(detail::fftw_planner_mutex());
            fftw_destroy_plan(plan_);
            plan_ = nullptr;
        }
    }

    int n_;
    long half_ = 0;
    long m_ = 0;
    double min_eigen_ = 0.0;
    std::vector<double> amp_;
    fftw_plan plan_ = nullptr;
};

inline std::shared_ptr<const FgnGenerator> make_fgn_generator(int n, double dt, double H,
                                                              const SamplerOptions& opts) {
    Backend b = opts.backend;
    if (b == Backend::Auto) b = n <= opts.cholesky_max_n ? Backend::Cholesky : Backend::Circulant;
    if (b == Backend::Cholesky) {
        if (n > opts.cholesky_max_n)
            throw PreconditionError("grid size " + std::to_string(n) + " exceeds the Cholesky cap " +
                                    std::to_string(opts.cholesky_max_n));
        return std::make_shared<CholeskyFgn>(n, dt, H);
    }
    return std::make_shared<CirculantFgn>(n, dt, H, opts.spectrum_tol);
}

// Process-wide cache so repeated sampling on one grid factorizes once.
inline std::shared_ptr<const FgnGenerator> cached_fgn_generator(int n, double dt, double H,
                                                                const SamplerOptions& opts) {
    using Key = std::tuple<int, double, double, int, int>;
    static std::mutex mtx;
    static std::map<Key, std::shared_ptr<const FgnGenerator>> cache;
    Key key{n, dt, H, static_cast<int>(opts.backend), opts.cholesky_max_n};
    std::lock_guard lock(mtx);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto gen = make_fgn_generator(n, dt, H, opts);
    if (cache.size() > 32) cache.clear();
    cache.emplace(key, gen);
    return gen;
}

// d-dimensional fBm sampler on a fixed grid; deterministic per seed.
class FbmSampler {
public:
    FbmSampler(TimeGrid grid, HurstConfig cfg, SamplerOptions opts = {})
        : grid_(grid), cfg_(cfg) {
        grid_.validate();
        cfg_.validate();
        gen_ = cached_fgn_generator(grid_.n, grid_.dt(), cfg_.H, opts);
    }

    const TimeGrid& grid() const { return grid_; }
    const HurstConfig& config() const { return cfg_; }
    Backend backend() const { return gen_->backend(); }
    const FgnGenerator& generator() const { return *gen_; }

    void sample_into(std::uint64_t seed, FbmPath& path) const {
        if (path.values.size() != static_cast<std::size_t>(grid_.n + 1) * cfg_.d) path = FbmPath(grid_, cfg_);
        path.grid = grid_;
        path.config = cfg_;
        const std::size_t n = static_cast<std::size_t>(grid_.n);
        std::vector<double> inc(n), inc2(n);
        auto accumulate = [&](const std::vector<double>& v, int j) {
            double acc = 0.0;
            path(0, j) = 0.0;
            for (int k = 0; k < grid_.n; ++k) {
                acc += v[static_cast<std::size_t>(k)];
                path(k + 1, j) = acc;
            }
        };
        // The circulant backend yields two independent components per
        // transform; components (j, j+1) share the substream of j.
        const bool paired = gen_->backend() == Backend::Circulant;
        for (int j = 0; j < cfg_.d;) {
            Engine eng(component_seed(seed, static_cast<std::uint64_t>(j)));
            if (paired && j + 1 < cfg_.d) {
                gen_->generate_pair(eng, inc.data(), inc2.data());
                accumulate(inc, j);
                accumulate(inc2, j + 1);
                j += 2;
            } else {
                gen_->generate(eng, inc.data());
                accumulate(inc, j);
                j += 1;
            }
        }
    }

    FbmPath sample(std::uint64_t seed) const {
        FbmPath p(grid_, cfg_);
        sample_into(seed, p);
        return p;
    }

private:
    TimeGrid grid_;
    HurstConfig cfg_;
    std::shared_ptr<const FgnGenerator> gen_;
};

inline FbmPath sample_fbm(const TimeGrid& grid, const HurstConfig& cfg, std::uint64_t seed,
                          const SamplerOptions& opts = {}) {
    return FbmSampler(grid, cfg, opts).sample(seed);
}

} // namespace silt
