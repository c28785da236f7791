#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"

namespace silt {

enum class Transform { Rational, Tangent, None };

inline std::string_view transform_name(Transform t) {
    switch (t) {
    case Transform::Rational: return "rational";
    case Transform::Tangent: return "tangent";
    case Transform::None: return "none";
    }
    return "rational";
}

struct QuadSpec {
    double rel_tol = 1e-4;
    double abs_tol = 1e-15;
    long max_evals = 10'000'000;
    // Pre-transform truncation of unbounded axes; infinity integrates the full half-line.
    double truncation_radius = std::numeric_limits<double>::infinity();
    Transform transform = Transform::Rational;
    unsigned threads = 1;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw PreconditionError("quadrature tolerances must be positive");
        if (max_evals < 1000) throw PreconditionError("max_evals must be at least 1000");
        if (!(truncation_radius > 0.0)) throw PreconditionError("truncation radius must be positive");
        if (transform == Transform::None && std::isinf(truncation_radius))
            throw PreconditionError("transform 'none' needs a finite truncation radius");
    }
};

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    long evals = 0;
    bool converged = false;
    std::string note;

    QuadResult& operator+=(const QuadResult& o) {
        value += o.value;
        error_estimate += o.error_estimate;
        evals += o.evals;
        converged = converged && o.converged;
        if (!o.note.empty()) note += (note.empty() ? "" : "; ") + o.note;
        return *this;
    }
    QuadResult scaled(double s) const {
        QuadResult r = *this;
        r.value *= s;
        r.error_estimate *= std::abs(s);
        return r;
    }
};

inline bool within_tolerance(double err, double value, double rel_tol, double abs_tol) {
    return err <= std::max(abs_tol, rel_tol * std::abs(value));
}

// Map of [0, vmax] onto [0, R] (R possibly infinite) for one unbounded axis.
struct HalfLineMap {
    Transform transform = Transform::Rational;
    double radius = std::numeric_limits<double>::infinity();

    double vmax() const {
        if (std::isinf(radius)) return 1.0;
        switch (transform) {
        case Transform::Rational: return radius / (1.0 + radius);
        case Transform::Tangent: return 2.0 / std::numbers::pi * std::atan(radius);
        case Transform::None: return 1.0;
        }
        return 1.0;
    }

    // Returns u(v) and writes du/dv.
    double operator()(double v, double& jac) const {
        switch (transform) {
        case Transform::Rational: {
            double w = 1.0 - v;
            jac = 1.0 / (w * w);
            return v / w;
        }
        case Transform::Tangent: {
            double a = 0.5 * std::numbers::pi * v;
            double c = std::cos(a);
            jac = 0.5 * std::numbers::pi / (c * c);
            return std::tan(a);
        }
        case Transform::None:
            jac = radius;
            return radius * v;
        }
        jac = 1.0;
        return v;
    }
};

inline HalfLineMap half_line(const QuadSpec& spec) { return HalfLineMap{spec.transform, spec.truncation_radius}; }

// ---------------------------------------------------------------------------
// One-dimensional adaptive Gauss-Kronrod (7/15)
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval1 {
    double a, b, value, err;
    bool operator<(const Interval1& o) const { return err < o.err; }
};

template <class F>
Interval1 gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resk = fc * kWgk[7];
    double resg = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double s = f(c - dx) + f(c + dx);
        resk += kWgk[j] * s;
        if (j % 2 == 1) resg += kWg[j / 2] * s;
    }
    return {a, b, resk * h, std::abs((resk - resg) * h)};
}

} // namespace detail

template <class F>
QuadResult integrate_1d(F&& f, double a, double b, double rel_tol, double abs_tol, long max_evals = 1'000'000) {
    QuadResult out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    std::priority_queue<detail::Interval1> heap;
    auto first = detail::gk15(f, a, b);
    out.evals = 15;
    heap.push(first);
    double total = first.value;
    double err = first.err;
    long iter = 0;
    bool stalled = false;
    while (!within_tolerance(err, total, rel_tol, abs_tol) && out.evals + 30 <= max_evals) {
        auto worst = heap.top();
        heap.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            heap.push(worst);
            stalled = true;
            break;
        }
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        out.evals += 30;
        heap.push(left);
        heap.push(right);
        total += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        if (++iter % 256 == 0) {
            // Resum to avoid drift of the running totals.
            auto copy = heap;
            total = 0.0;
            err = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                err += copy.top().err;
                copy.pop();
            }
        }
    }
    double v = 0.0, e = 0.0;
    while (!heap.empty()) {
        v += heap.top().value;
        e += heap.top().err;
        heap.pop();
    }
    out.value = v;
    out.error_estimate = e;
    out.converged = !stalled && std::isfinite(v) && within_tolerance(e, v, rel_tol, abs_tol);
    if (stalled) out.note = "1-d quadrature reached machine resolution";
    else if (!out.converged) out.note = "1-d quadrature hit its evaluation budget";
    return out;
}

template <class F>
QuadResult integrate_1d(F&& f, double a, double b, const QuadSpec& spec) {
    return integrate_1d(std::forward<F>(f), a, b, spec.rel_tol, spec.abs_tol, spec.max_evals);
}

// Integral over [0, R) of a half-line integrand under the QuadSpec transform.
template <class F>
QuadResult integrate_half_line(F&& f, const QuadSpec& spec) {
    spec.validate();
    HalfLineMap map = half_line(spec);
    auto g = [&](double v) {
        double jac;
        double u = map(v, jac);
        if (!std::isfinite(u) || !std::isfinite(jac)) return 0.0;
        return f(u) * jac;
    };
    return integrate_1d(g, 0.0, map.vmax(), spec);
}

// ---------------------------------------------------------------------------
// Multidimensional adaptive cubature: Genz-Malik degree 7/5 embedded rule
// with bisection of the region of largest error along the axis of largest
// fourth difference.
// ---------------------------------------------------------------------------

template <std::size_t Dim>
class GenzMalikRule {
    static_assert(Dim >= 2, "Genz-Malik rule needs at least two dimensions");

public:
    using Point = std::array<double, Dim>;

    struct Region {
        Point center{};
        Point half{};
        double value = 0.0;
        double err = 0.0;
        std::size_t split = 0;
        bool operator<(const Region& o) const { return err < o.err; }
    };

    static constexpr long evals_per_region() {
        return 1 + 4 * static_cast<long>(Dim) + 2 * static_cast<long>(Dim) * (static_cast<long>(Dim) - 1) +
               (1L << Dim);
    }

    template <class F>
    static void evaluate(F& f, Region& r) {
        constexpr double n = static_cast<double>(Dim);
        const double l2 = std::sqrt(9.0 / 70.0);
        const double l4 = std::sqrt(9.0 / 10.0);
        const double l5 = std::sqrt(9.0 / 19.0);
        const double w1 = (12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0;
        const double w2 = 980.0 / 6561.0;
        const double w3 = (1820.0 - 400.0 * n) / 19683.0;
        const double w4 = 200.0 / 19683.0;
        const double w5 = 6859.0 / 19683.0 / static_cast<double>(1L << Dim);
        const double e1 = (729.0 - 950.0 * n + 50.0 * n * n) / 729.0;
        const double e2 = 245.0 / 486.0;
        const double e3 = (265.0 - 100.0 * n) / 1458.0;
        const double e4 = 25.0 / 729.0;
        const double ratio = (l2 * l2) / (l4 * l4);

        const Point& c = r.center;
        const Point& h = r.half;
        const double f0 = f(c);
        double sum2 = 0.0, sum3 = 0.0, sum4 = 0.0, sum5 = 0.0;
        double best_diff = -1.0;
        std::size_t best_dim = 0;
        Point p = c;
        for (std::size_t i = 0; i < Dim; ++i) {
            p[i] = c[i] - l2 * h[i];
            double a1 = f(p);
            p[i] = c[i] + l2 * h[i];
            double a2 = f(p);
            p[i] = c[i] - l4 * h[i];
            double b1 = f(p);
            p[i] = c[i] + l4 * h[i];
            double b2 = f(p);
            p[i] = c[i];
            sum2 += a1 + a2;
            sum3 += b1 + b2;
            double diff = std::abs(a1 + a2 - 2.0 * f0 - ratio * (b1 + b2 - 2.0 * f0));
            if (diff > best_diff * (1.0 + 1e-12) || (diff >= best_diff * (1.0 - 1e-12) && h[i] > h[best_dim])) {
                best_diff = diff;
                best_dim = i;
            }
        }
        for (std::size_t i = 0; i < Dim; ++i) {
            for (std::size_t j = i + 1; j < Dim; ++j) {
                for (int si = -1; si <= 1; si += 2) {
                    for (int sj = -1; sj <= 1; sj += 2) {
                        p = c;
                        p[i] = c[i] + si * l4 * h[i];
                        p[j] = c[j] + sj * l4 * h[j];
                        sum4 += f(p);
                    }
                }
            }
        }
        for (unsigned long mask = 0; mask < (1UL << Dim); ++mask) {
            for (std::size_t i = 0; i < Dim; ++i) p[i] = c[i] + ((mask >> i) & 1UL ? l5 : -l5) * h[i];
            sum5 += f(p);
        }
        double vol = 1.0;
        for (std::size_t i = 0; i < Dim; ++i) vol *= 2.0 * h[i];
        const double r7 = vol * (w1 * f0 + w2 * sum2 + w3 * sum3 + w4 * sum4 + w5 * sum5);
        const double r5 = vol * (e1 * f0 + e2 * sum2 + e3 * sum3 + e4 * sum4);
        r.value = r7;
        r.err = std::abs(r7 - r5);
        r.split = best_dim;
    }
};

template <std::size_t Dim, class F>
QuadResult cubature(F&& f, const std::array<double, Dim>& lo, const std::array<double, Dim>& hi, double rel_tol,
                    double abs_tol, long max_evals, unsigned threads = 1) {
    using Rule = GenzMalikRule<Dim>;
    using Region = typename Rule::Region;
    constexpr std::size_t kBatch = 8;
    QuadResult out;

    Region root;
    for (std::size_t i = 0; i < Dim; ++i) {
        root.center[i] = 0.5 * (lo[i] + hi[i]);
        root.half[i] = 0.5 * (hi[i] - lo[i]);
        if (!(root.half[i] > 0.0)) {
            out.converged = true;
            return out;
        }
    }
    Rule::evaluate(f, root);
    out.evals = Rule::evals_per_region();
    std::priority_queue<Region> heap;
    heap.push(root);
    double total = root.value;
    double err = root.err;
    long iter = 0;
    std::vector<Region> parents;
    std::vector<Region> children;
    while (!within_tolerance(err, total, rel_tol, abs_tol) &&
           out.evals + 2 * Rule::evals_per_region() <= max_evals) {
        parents.clear();
        while (!heap.empty() && parents.size() < kBatch &&
               out.evals + 2 * static_cast<long>(parents.size() + 1) * Rule::evals_per_region() <= max_evals) {
            parents.push_back(heap.top());
            heap.pop();
        }
        if (parents.empty()) break;
        children.assign(2 * parents.size(), Region{});
        for (std::size_t k = 0; k < parents.size(); ++k) {
            const Region& pr = parents[k];
            const std::size_t s = pr.split;
            Region a = pr, b = pr;
            a.half[s] = b.half[s] = 0.5 * pr.half[s];
            a.center[s] = pr.center[s] - a.half[s];
            b.center[s] = pr.center[s] + b.half[s];
            children[2 * k] = a;
            children[2 * k + 1] = b;
        }
        parallel_for(children.size(), threads, [&](std::size_t i) { Rule::evaluate(f, children[i]); });
        out.evals += static_cast<long>(children.size()) * Rule::evals_per_region();
        for (std::size_t k = 0; k < parents.size(); ++k) {
            total -= parents[k].value;
            err -= parents[k].err;
        }
        for (const auto& ch : children) {
            total += ch.value;
            err += ch.err;
            heap.push(ch);
        }
        if (++iter % 512 == 0) {
            auto copy = heap;
            total = 0.0;
            err = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                err += copy.top().err;
                copy.pop();
            }
        }
    }
    double v = 0.0, e = 0.0;
    while (!heap.empty()) {
        v += heap.top().value;
        e += heap.top().err;
        heap.pop();
    }
    out.value = v;
    out.error_estimate = e;
    out.converged = std::isfinite(v) && within_tolerance(e, v, rel_tol, abs_tol);
    if (!std::isfinite(v)) out.note = "non-finite integrand value";
    else if (!out.converged) out.note = "cubature hit its evaluation budget";
    return out;
}

template <std::size_t Dim, class F>
QuadResult cubature(F&& f, const std::array<double, Dim>& lo, const std::array<double, Dim>& hi,
                    const QuadSpec& spec) {
    return cubature<Dim>(std::forward<F>(f), lo, hi, spec.rel_tol, spec.abs_tol, spec.max_evals, spec.threads);
}

// Integral over the positive orthant [0, R)^Dim under the QuadSpec transform.
template <std::size_t Dim, class F>
QuadResult integrate_orthant(F&& f, const QuadSpec& spec) {
    spec.validate();
    HalfLineMap map = half_line(spec);
    std::array<double, Dim> lo{}, hi{};
    for (std::size_t i = 0; i < Dim; ++i) hi[i] = map.vmax();
    auto g = [&](const std::array<double, Dim>& v) {
        std::array<double, Dim> u;
        double jac = 1.0;
        for (std::size_t i = 0; i < Dim; ++i) {
            double ji;
            u[i] = map(v[i], ji);
            // Rounding can push a node onto v = 1, i.e. u = inf, where the
            // integrands of interest vanish.
            if (!std::isfinite(u[i]) || !std::isfinite(ji)) return 0.0;
            jac *= ji;
        }
        double val = f(u);
        return val == 0.0 ? 0.0 : val * jac;
    };
    return cubature<Dim>(g, lo, hi, spec);
}

} // namespace silt
