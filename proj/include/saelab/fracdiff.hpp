#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "saelab/adf_critical_values.hpp"

namespace saelab {

// Realized fractional-differencing setup for one feature.
struct FracDiffSpec {
    double d = 0.0;
    double tau = 1e-5;             // weight truncation tolerance
    std::vector<double> weights;   // realized window, weights[0] == 1
    double alpha = 0.01;           // ADF significance used to pick d
};

struct AdfResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int lags_used = 0;
    int n_effective = 0;
};

enum class LagPolicy { Fixed, Aic };

// Fractional differencing weights: w_0 = 1, w_k = -w_{k-1} * (d - k + 1) / k,
// truncated at the first |w_k| < tau or when max_weights entries are held.
inline std::vector<double> fd_weights(double d, double tau, std::size_t max_weights) {
    if (d < 0.0) throw std::domain_error("fd_weights: d must be >= 0");
    if (tau <= 0.0) throw std::invalid_argument("fd_weights: tau must be positive");
    if (max_weights < 1) throw std::invalid_argument("fd_weights: max_weights must be >= 1");
    std::vector<double> w{1.0};
    double prev = 1.0;
    for (std::size_t k = 1; w.size() < max_weights; ++k) {
        const double wk = -prev * (d - static_cast<double>(k) + 1.0) / static_cast<double>(k);
        if (std::abs(wk) < tau) break;
        w.push_back(wk);
        prev = wk;
    }
    return w;
}

// Fixed-width-window fractional differentiation:
// out[t] = sum_k w_k * x[t - k], emitted for t >= len(w) - 1.
inline std::vector<double> ffd_transform(const std::vector<double>& series, double d, double tau,
                                         std::size_t max_weights = 10000) {
    const auto w = fd_weights(d, tau, max_weights);
    if (series.size() < w.size())
        throw std::invalid_argument("ffd_transform: series length " + std::to_string(series.size()) +
                                    " below required minimum " + std::to_string(w.size()));
    const std::size_t m = w.size();
    std::vector<double> out(series.size() - m + 1);
    for (std::size_t t = m - 1; t < series.size(); ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k < m; ++k) acc += w[k] * series[t - k];
        out[t - m + 1] = acc;
    }
    return out;
}

namespace detail {

// Solves A x = b in place by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t k = b.size();
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t pivot = i;
        for (std::size_t j = i + 1; j < k; ++j)
            if (std::abs(a[j][i]) > std::abs(a[pivot][i])) pivot = j;
        if (std::abs(a[pivot][i]) < 1e-300) throw std::runtime_error("singular regression matrix");
        std::swap(a[i], a[pivot]);
        std::swap(b[i], b[pivot]);
        for (std::size_t j = i + 1; j < k; ++j) {
            const double f = a[j][i] / a[i][i];
            for (std::size_t l = i; l < k; ++l) a[j][l] -= f * a[i][l];
            b[j] -= f * b[i];
        }
    }
    std::vector<double> x(k);
    for (std::size_t ii = k; ii-- > 0;) {
        double acc = b[ii];
        for (std::size_t j = ii + 1; j < k; ++j) acc -= a[ii][j] * x[j];
        x[ii] = acc / a[ii][ii];
    }
    return x;
}

struct OlsFit {
    double coef_tstat;  // t-ratio of the level coefficient
    double sse;
    std::size_t n_obs;
    std::size_t n_params;
};

// ADF regression with `lags` lagged differences; returns the t-ratio of the
// y_{t-1} coefficient. Design: [1, y_{t-1}, dy_{t-1}, ..., dy_{t-lags}].
inline OlsFit adf_regression(const std::vector<double>& y, int lags) {
    const std::size_t n = y.size();
    const std::size_t p = static_cast<std::size_t>(lags);
    const std::size_t k = 2 + p;
    if (n < p + 2 + k) throw std::invalid_argument("adf_regression: series too short");
    const std::size_t n_obs = n - 1 - p;

    std::vector<std::vector<double>> xtx(k, std::vector<double>(k, 0.0));
    std::vector<double> xty(k, 0.0);
    std::vector<double> row(k);
    double syy = 0.0;

    auto accumulate = [&](const std::vector<double>& r, double target) {
        for (std::size_t i = 0; i < k; ++i) {
            xty[i] += r[i] * target;
            for (std::size_t j = i; j < k; ++j) xtx[i][j] += r[i] * r[j];
        }
        syy += target * target;
    };

    for (std::size_t t = p + 1; t < n; ++t) {
        row[0] = 1.0;
        row[1] = y[t - 1];
        for (std::size_t l = 1; l <= p; ++l) row[1 + l] = y[t - l] - y[t - l - 1];
        accumulate(row, y[t] - y[t - 1]);
    }
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < i; ++j) xtx[i][j] = xtx[j][i];

    const auto beta = solve_linear(xtx, xty);

    // SSE = y'y - 2 b'X'y + b'X'X b
    double bxy = 0.0, bxxb = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        bxy += beta[i] * xty[i];
        for (std::size_t j = 0; j < k; ++j) bxxb += beta[i] * xtx[i][j] * beta[j];
    }
    double sse = syy - 2.0 * bxy + bxxb;
    if (sse < 0.0) sse = 0.0;

    std::vector<double> unit(k, 0.0);
    unit[1] = 1.0;
    const auto inv_col = solve_linear(xtx, unit);
    const double sigma2 = sse / static_cast<double>(n_obs - k);
    const double se = std::sqrt(sigma2 * inv_col[1]);
    if (!(se > 0.0)) throw std::runtime_error("adf_regression: degenerate standard error");
    return OlsFit{beta[1] / se, sse, n_obs, k};
}

// p-value from the embedded quantile surface; linear in 1/n across sample
// sizes, linear in the statistic between quantiles, exponential wings beyond
// the tabulated tails. Strictly monotone in the statistic.
inline double adf_pvalue(double stat, int n_effective) {
    using namespace adf_tables;
    const double inv_n = 1.0 / std::clamp(static_cast<double>(n_effective),
                                          kSampleSizes[0], kSampleSizes[kNumSizes - 1]);
    // bracket in 1/n (sample sizes ascending => 1/n descending)
    int hi = kNumSizes - 1;
    while (hi > 0 && 1.0 / kSampleSizes[hi - 1] < inv_n) --hi;
    const int lo = hi > 0 ? hi - 1 : 0;
    double q[kNumProbs];
    if (lo == hi) {
        for (int i = 0; i < kNumProbs; ++i) q[i] = kQuantiles[hi][i];
    } else {
        const double x0 = 1.0 / kSampleSizes[hi], x1 = 1.0 / kSampleSizes[lo];
        const double w = (inv_n - x0) / (x1 - x0);
        for (int i = 0; i < kNumProbs; ++i)
            q[i] = (1.0 - w) * kQuantiles[hi][i] + w * kQuantiles[lo][i];
    }

    if (stat <= q[0]) {
        const double slope = (kProbs[1] - kProbs[0]) / (q[1] - q[0]);
        const double p = kProbs[0] * std::exp(slope / kProbs[0] * (stat - q[0]));
        return std::max(p, 1e-12);
    }
    if (stat >= q[kNumProbs - 1]) {
        const int m = kNumProbs - 1;
        const double slope = (kProbs[m] - kProbs[m - 1]) / (q[m] - q[m - 1]);
        const double tail = 1.0 - kProbs[m];
        const double p = 1.0 - tail * std::exp(-slope / tail * (stat - q[m]));
        return std::min(p, 1.0 - 1e-12);
    }
    int j = 0;
    while (stat > q[j + 1]) ++j;
    const double w = (stat - q[j]) / (q[j + 1] - q[j]);
    return kProbs[j] + w * (kProbs[j + 1] - kProbs[j]);
}

}  // namespace detail

// Augmented Dickey-Fuller test, constant-only regression (no trend):
//   dx_t = c + g*x_{t-1} + sum_i b_i dx_{t-i} + e_t.
// Fixed policy uses exactly `max_lags` lagged differences; Aic scans
// 0..max_lags on a common sample and refits the winner.
inline AdfResult adf_test(const std::vector<double>& series, int max_lags = 1,
                          LagPolicy policy = LagPolicy::Fixed) {
    if (max_lags < 0) throw std::invalid_argument("adf_test: max_lags must be >= 0");
    if (series.size() < static_cast<std::size_t>(max_lags) + 10)
        throw std::invalid_argument("adf_test: series length must be at least max_lags + 10");
    const double first = series.front();
    if (std::all_of(series.begin(), series.end(), [&](double v) { return v == first; }))
        throw std::invalid_argument("adf_test: series is constant (zero-variance regression)");

    int lags = max_lags;
    if (policy == LagPolicy::Aic && max_lags > 0) {
        // common estimation sample: drop the first max_lags observations
        const std::vector<double> common(series.begin() + max_lags, series.end());
        double best = std::numeric_limits<double>::infinity();
        int best_p = 0;
        for (int p = 0; p <= max_lags; ++p) {
            // shift the window so every candidate explains the same targets
            const std::vector<double> win(series.begin() + (max_lags - p), series.end());
            const auto fit = detail::adf_regression(win, p);
            const double n_obs = static_cast<double>(fit.n_obs);
            const double aic = n_obs * std::log(fit.sse / n_obs) +
                               2.0 * static_cast<double>(fit.n_params);
            if (aic < best) {
                best = aic;
                best_p = p;
            }
        }
        lags = best_p;
    }

    const auto fit = detail::adf_regression(series, lags);
    AdfResult res;
    res.statistic = fit.coef_tstat;
    res.lags_used = lags;
    res.n_effective = static_cast<int>(fit.n_obs);
    res.p_value = detail::adf_pvalue(res.statistic, res.n_effective);
    return res;
}

struct DSearchPoint {
    double d = 0.0;
    double statistic = 0.0;
    double p_value = 1.0;
    double correlation = 1.0;  // corr(original tail, transformed series)
};

struct OptimalDResult {
    double d_star = 0.0;
    std::vector<DSearchPoint> diagnostics;
};

// Raised when no grid value stationarizes the series; carries the full
// diagnostic sweep so the caller can decide how to extend the grid.
class NoStationaryD : public std::runtime_error {
public:
    NoStationaryD(std::string msg, std::vector<DSearchPoint> diag)
        : std::runtime_error(std::move(msg)), diagnostics(std::move(diag)) {}
    std::vector<DSearchPoint> diagnostics;
};

namespace detail {

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < n; ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace detail

// Smallest grid d whose FFD-transformed series passes the ADF test at level
// alpha. Diagnostics cover every grid point up to and including d*.
inline OptimalDResult optimal_d(const std::vector<double>& series, const std::vector<double>& d_grid,
                                double alpha, double tau, std::size_t max_weights = 10000,
                                int adf_lags = 1, LagPolicy policy = LagPolicy::Fixed) {
    if (d_grid.empty()) throw std::invalid_argument("optimal_d: empty d grid");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("optimal_d: alpha must be in (0,1)");
    for (std::size_t i = 0; i < d_grid.size(); ++i) {
        if (d_grid[i] < 0.0) throw std::invalid_argument("optimal_d: grid values must be >= 0");
        if (i > 0 && d_grid[i] <= d_grid[i - 1])
            throw std::invalid_argument("optimal_d: grid must be strictly ascending");
    }

    OptimalDResult res;
    for (double d : d_grid) {
        const auto transformed = ffd_transform(series, d, tau, max_weights);
        const auto adf = adf_test(transformed, adf_lags, policy);
        DSearchPoint pt;
        pt.d = d;
        pt.statistic = adf.statistic;
        pt.p_value = adf.p_value;
        const std::vector<double> tail(series.end() - static_cast<std::ptrdiff_t>(transformed.size()),
                                       series.end());
        pt.correlation = detail::pearson(tail, transformed);
        res.diagnostics.push_back(pt);
        if (adf.p_value < alpha) {
            res.d_star = d;
            return res;
        }
    }
    throw NoStationaryD("optimal_d: no grid value passes the ADF test at alpha = " +
                            std::to_string(alpha) + " (largest d tried: " +
                            std::to_string(d_grid.back()) + ")",
                        std::move(res.diagnostics));
}

// Default search grid: d = 0.00 .. 1.00 in steps of 0.05.
inline std::vector<double> default_d_grid(double start = 0.0, double stop = 1.0, double step = 0.05) {
    if (step <= 0.0) throw std::invalid_argument("default_d_grid: step must be positive");
    std::vector<double> g;
    for (int i = 0;; ++i) {
        const double d = start + step * i;
        if (d > stop + 1e-12) break;
        g.push_back(d);
    }
    return g;
}

}  // namespace saelab
