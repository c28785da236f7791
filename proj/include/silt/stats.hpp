#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "errors.hpp"

namespace silt {

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0; // unbiased
    double skewness = 0.0; // g1
    double excess_kurtosis = 0.0; // g2
    double m4 = 0.0; // fourth central moment
};

inline Moments moments(const std::vector<double>& x) {
    Moments m;
    m.n = x.size();
    if (m.n < 2) throw PreconditionError("moments need at least two values");
    const double n = static_cast<double>(m.n);
    m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (double v : x) {
        const double c = v - m.mean;
        const double c2 = c * c;
        s2 += c2;
        s3 += c2 * c;
        s4 += c2 * c2;
    }
    const double m2 = s2 / n;
    m.variance = s2 / (n - 1.0);
    m.m4 = s4 / n;
    if (m2 > 0.0) {
        m.skewness = (s3 / n) / std::pow(m2, 1.5);
        m.excess_kurtosis = m.m4 / (m2 * m2) - 3.0;
    }
    return m;
}

// Standard errors of g1 and g2 under normality.
inline double skewness_se(std::size_t n) {
    const double N = static_cast<double>(n);
    return std::sqrt(6.0 * N * (N - 1.0) / ((N - 2.0) * (N + 1.0) * (N + 3.0)));
}
inline double kurtosis_se(std::size_t n) {
    const double N = static_cast<double>(n);
    return 2.0 * skewness_se(n) * std::sqrt((N * N - 1.0) / ((N - 3.0) * (N + 5.0)));
}

// Large-sample standard error of the sample variance.
inline double variance_se(const Moments& m) {
    const double n = static_cast<double>(m.n);
    const double v = m.variance;
    return std::sqrt(std::max(0.0, (m.m4 - v * v * (n - 3.0) / (n - 1.0)) / n));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Anderson-Darling test of normality with mean and variance estimated from
// the sample; the statistic carries the small-sample factor
// (1 + 0.75/n + 2.25/n^2) and the p-value the D'Agostino-Stephens fit.
struct AndersonDarling {
    double statistic = 0.0;
    double adjusted = 0.0;
    double p_value = 1.0;
};

inline AndersonDarling anderson_darling(std::vector<double> x) {
    const std::size_t n = x.size();
    if (n < 8) throw PreconditionError("Anderson-Darling needs at least 8 values");
    const Moments m = moments(x);
    const double sd = std::sqrt(m.variance);
    if (!(sd > 0.0)) throw PreconditionError("Anderson-Darling needs a non-degenerate sample");
    std::sort(x.begin(), x.end());
    const double N = static_cast<double>(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double zi = (x[i] - m.mean) / sd;
        const double zj = (x[n - 1 - i] - m.mean) / sd;
        // log Phi(zi) + log(1 - Phi(zj)), in tail-safe form
        const double lo = std::log(std::max(normal_cdf(zi), 1e-300));
        const double hi = std::log(std::max(normal_cdf(-zj), 1e-300));
        s += (2.0 * static_cast<double>(i) + 1.0) * (lo + hi);
    }
    AndersonDarling ad;
    ad.statistic = -N - s / N;
    const double a = ad.statistic * (1.0 + 0.75 / N + 2.25 / (N * N));
    ad.adjusted = a;
    double p;
    if (a >= 0.6) p = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
    else if (a >= 0.34) p = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
    else if (a >= 0.2) p = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
    else p = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
    ad.p_value = std::clamp(p, 0.0, 1.0);
    return ad;
}

struct CovarianceEstimate {
    double value = 0.0;
    double se = 0.0;
};

// Sample covariance and the standard error of the mean of centered products.
inline CovarianceEstimate covariance(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw PreconditionError("covariance needs equal sizes >= 3");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    std::vector<double> prod(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
    const double mp = std::accumulate(prod.begin(), prod.end(), 0.0) / n;
    double ss = 0.0;
    for (double p : prod) ss += (p - mp) * (p - mp);
    CovarianceEstimate c;
    c.value = mp * n / (n - 1.0);
    c.se = std::sqrt(ss / (n - 1.0) / n);
    return c;
}

inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
    const double c = covariance(x, y).value;
    return c / std::sqrt(moments(x).variance * moments(y).variance);
}

// Ordinary least squares y = a + b x.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw PreconditionError("fit_line needs two or more points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw PreconditionError("fit_line needs distinct abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        f.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return f;
}

// Summary of one Monte Carlo sample, optionally with several horizons.
struct StatReport {
    std::size_t n = 0;
    double mean = 0.0;
    double mean_se = 0.0;
    double variance = 0.0;
    double variance_se = 0.0;
    double skewness = 0.0;
    double skewness_se = 0.0;
    double excess_kurtosis = 0.0;
    double kurtosis_se = 0.0;
    double ad_statistic = 0.0;
    double normality_p = 1.0;
    // covariance across horizons (row-major, k x k) and its standard errors
    std::vector<double> covariance;
    std::vector<double> covariance_se;
};

inline StatReport make_report(const std::vector<double>& x) {
    const Moments m = moments(x);
    StatReport r;
    r.n = m.n;
    r.mean = m.mean;
    r.variance = m.variance;
    r.mean_se = std::sqrt(m.variance / static_cast<double>(m.n));
    r.variance_se = variance_se(m);
    r.skewness = m.skewness;
    r.excess_kurtosis = m.excess_kurtosis;
    r.skewness_se = skewness_se(m.n);
    r.kurtosis_se = kurtosis_se(m.n);
    if (m.n >= 8 && m.variance > 0.0) {
        const auto ad = anderson_darling(x);
        r.ad_statistic = ad.adjusted;
        r.normality_p = ad.p_value;
    }
    return r;
}

// Report on the last horizon with the covariance matrix over all horizons.
inline StatReport make_report(const std::vector<std::vector<double>>& by_horizon) {
    if (by_horizon.empty()) throw PreconditionError("no horizons");
    StatReport r = make_report(by_horizon.back());
    const std::size_t k = by_horizon.size();
    r.covariance.assign(k * k, 0.0);
    r.covariance_se.assign(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            const auto c = covariance(by_horizon[i], by_horizon[j]);
            r.covariance[i * k + j] = c.value;
            r.covariance_se[i * k + j] = c.se;
        }
    return r;
}

} // namespace silt
