#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace saelab {

struct EquityCurve {
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    double initial_capital = 1000.0;

    std::size_t size() const { return values.size(); }

    std::vector<double> simple_returns() const {
        std::vector<double> r;
        r.reserve(values.size() > 0 ? values.size() - 1 : 0);
        for (std::size_t i = 1; i < values.size(); ++i) r.push_back(values[i] / values[i - 1] - 1.0);
        return r;
    }
};

struct MetricConfig {
    double periods_per_year = 252.0;

    void validate() const {
        if (!(periods_per_year > 0.0))
            throw std::invalid_argument("MetricConfig: periods_per_year must be positive");
    }
};

inline double stdnorm_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); }

// Annualized return compounded: V_n = V_0 * (1 + ARC)^years.
inline double arc(const EquityCurve& equity, double years) {
    if (equity.values.empty()) throw std::invalid_argument("arc: empty equity curve");
    if (!(years > 0.0)) throw std::invalid_argument("arc: years must be positive");
    const double v0 = equity.values.front(), vn = equity.values.back();
    if (!(v0 > 0.0) || !(vn > 0.0)) throw std::invalid_argument("arc: equity values must be positive");
    return std::pow(vn / v0, 1.0 / years) - 1.0;
}

// Annualized standard deviation: sample std (divisor N-1) * sqrt(n_year).
inline double asd(const std::vector<double>& returns, double n_year) {
    if (returns.size() < 2) throw std::invalid_argument("asd: need at least 2 returns");
    if (!(n_year > 0.0)) throw std::invalid_argument("asd: n_year must be positive");
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double ss = 0.0;
    for (double r : returns) ss += (r - mean) * (r - mean);
    return std::sqrt(ss / static_cast<double>(returns.size() - 1)) * std::sqrt(n_year);
}

inline double information_ratio(double arc_value, double asd_value) {
    if (!(asd_value > 0.0)) throw std::invalid_argument("information_ratio: ASD must be positive");
    return arc_value / asd_value;
}

// Maximum drawdown as a fraction of the running peak, in [0, 1).
inline double mdd(const EquityCurve& equity) {
    if (equity.values.empty()) throw std::invalid_argument("mdd: empty equity curve");
    double peak = equity.values.front();
    double worst = 0.0;
    for (double v : equity.values) {
        if (!(v > 0.0)) throw std::invalid_argument("mdd: equity values must be positive");
        peak = std::max(peak, v);
        worst = std::max(worst, (peak - v) / peak);
    }
    return worst;
}

struct MldResult {
    double years = 0.0;
    double periods = 0.0;
    bool unrecovered = false;  // the longest episode never regained its peak
};

// Maximum loss duration: the longest stretch from a running peak to the first
// later bar strictly above it, counted only when the curve actually dips below
// the peak in between. An episode still open at the series end is measured to
// the final bar and flagged.
inline MldResult mld(const EquityCurve& equity, double periods_per_year) {
    if (equity.values.empty()) throw std::invalid_argument("mld: empty equity curve");
    if (!(periods_per_year > 0.0)) throw std::invalid_argument("mld: periods_per_year must be positive");
    const auto& v = equity.values;
    const std::size_t n = v.size();
    MldResult res;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < n; ++m) {
        if (v[m] < peak) continue;  // not a running maximum
        peak = v[m];
        std::size_t j = m + 1;
        bool dipped = false;
        while (j < n && v[j] <= v[m]) {
            if (v[j] < v[m]) dipped = true;
            ++j;
        }
        if (!dipped) continue;
        const bool recovered = j < n;
        const double episode = static_cast<double>((recovered ? j : n - 1) - m);
        if (episode > res.periods) {
            res.periods = episode;
            res.unrecovered = !recovered;
        }
    }
    res.years = res.periods / periods_per_year;
    return res;
}

// Drawdown-adjusted information ratio: ARC^2 * sign(ARC) / (ASD * MDD).
inline double ir_star2(double arc_value, double asd_value, double mdd_value) {
    if (!(asd_value > 0.0)) throw std::invalid_argument("ir_star2: ASD must be positive");
    if (!(mdd_value > 0.0))
        throw std::invalid_argument("ir_star2: MDD is zero, metric undefined (report IR instead)");
    const double sign = arc_value > 0.0 ? 1.0 : (arc_value < 0.0 ? -1.0 : 0.0);
    return arc_value * arc_value * sign / (asd_value * mdd_value);
}

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Diebold-Mariano test on per-period losses. statistic = mean(d) / (s_d/sqrt(n))
// with d_t = loss_a_t - loss_b_t, referred to the normal distribution.
// One-sided alternative: A's losses are smaller (lower tail).
inline TestResult dm_test(const std::vector<double>& losses_a, const std::vector<double>& losses_b,
                          bool one_sided = false) {
    if (losses_a.size() != losses_b.size()) throw std::invalid_argument("dm_test: length mismatch");
    const std::size_t n = losses_a.size();
    if (n < 10) throw std::invalid_argument("dm_test: need at least 10 observations");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = losses_a[i] - losses_b[i];
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
        if (mean == 0.0) return {0.0, 1.0};  // identical loss series
        throw std::invalid_argument("dm_test: zero-variance loss differential");
    }
    TestResult res;
    res.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    res.p_value = one_sided ? stdnorm_cdf(res.statistic)
                            : 2.0 * (1.0 - stdnorm_cdf(std::abs(res.statistic)));
    return res;
}

// Loss-series builders for the forecast-accuracy test. Squared error is the
// regression convention; 0-1 loss on the called direction is the
// classification convention (a flat call counts as wrong whenever the
// realized direction is not flat).
inline std::vector<double> squared_error_losses(const std::vector<double>& predictions,
                                                const std::vector<double>& actuals) {
    if (predictions.size() != actuals.size())
        throw std::invalid_argument("squared_error_losses: length mismatch");
    std::vector<double> out(predictions.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double e = predictions[i] - actuals[i];
        out[i] = e * e;
    }
    return out;
}

inline std::vector<double> direction_losses(const std::vector<int>& predicted,
                                            const std::vector<int>& actual) {
    if (predicted.size() != actual.size())
        throw std::invalid_argument("direction_losses: length mismatch");
    std::vector<double> out(predicted.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = predicted[i] == actual[i] ? 0.0 : 1.0;
    return out;
}

namespace detail {

inline double annualized_ir_from_returns(const std::vector<double>& returns, double n_year) {
    double growth = 1.0;
    for (double r : returns) growth *= 1.0 + r;
    const double years = static_cast<double>(returns.size()) / n_year;
    const double arc_value = std::pow(growth, 1.0 / years) - 1.0;
    return arc_value / asd(returns, n_year);
}

}  // namespace detail

// t-test on the information ratios of two return series, using the
// standard-error shortcut SE = sigma / sqrt(n) where sigma is the standard
// deviation of per-period return differences.
inline TestResult ir_ttest(const std::vector<double>& returns_a, const std::vector<double>& returns_b,
                           double n_year, bool one_sided = false) {
    if (returns_a.size() != returns_b.size()) throw std::invalid_argument("ir_ttest: length mismatch");
    const std::size_t n = returns_a.size();
    if (n < 10) throw std::invalid_argument("ir_ttest: need at least 10 observations");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = returns_a[i] - returns_b[i];
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sigma > 0.0)) {
        if (mean == 0.0) return {0.0, 1.0};
        throw std::invalid_argument("ir_ttest: zero-variance return differential");
    }
    const double ir_a = detail::annualized_ir_from_returns(returns_a, n_year);
    const double ir_b = detail::annualized_ir_from_returns(returns_b, n_year);
    TestResult res;
    res.statistic = (ir_a - ir_b) / (sigma / std::sqrt(static_cast<double>(n)));
    res.p_value = one_sided ? 1.0 - stdnorm_cdf(res.statistic)
                            : 2.0 * (1.0 - stdnorm_cdf(std::abs(res.statistic)));
    return res;
}

// Equally weighted, per-bar rebalanced portfolio of equity curves. Curves are
// aligned on the intersection of their timestamp axes first.
inline EquityCurve portfolio_equal_weight(const std::vector<EquityCurve>& curves) {
    if (curves.empty()) throw std::invalid_argument("portfolio_equal_weight: no curves");
    std::vector<std::int64_t> common = curves[0].timestamps;
    for (std::size_t i = 1; i < curves.size(); ++i) {
        std::vector<std::int64_t> next;
        std::set_intersection(common.begin(), common.end(), curves[i].timestamps.begin(),
                              curves[i].timestamps.end(), std::back_inserter(next));
        common = std::move(next);
    }
    if (common.empty()) throw std::invalid_argument("portfolio_equal_weight: empty timestamp intersection");

    // per-curve values on the common axis
    std::vector<std::vector<double>> aligned(curves.size());
    for (std::size_t c = 0; c < curves.size(); ++c) {
        aligned[c].reserve(common.size());
        std::size_t k = 0;
        for (std::int64_t t : common) {
            while (curves[c].timestamps[k] != t) ++k;
            aligned[c].push_back(curves[c].values[k]);
        }
    }

    EquityCurve port;
    port.timestamps = common;
    double v0 = 0.0;
    for (const auto& a : aligned) v0 += a.front();
    v0 /= static_cast<double>(aligned.size());
    port.initial_capital = v0;
    port.values.push_back(v0);
    for (std::size_t i = 1; i < common.size(); ++i) {
        double mean_ret = 0.0;
        for (const auto& a : aligned) mean_ret += a[i] / a[i - 1] - 1.0;
        mean_ret /= static_cast<double>(aligned.size());
        port.values.push_back(port.values.back() * (1.0 + mean_ret));
    }
    return port;
}

// Full per-strategy metric block in the layout of the result tables.
struct PerfReport {
    double cumulative_return = 0.0;
    double arc = 0.0;
    double asd = 0.0;
    double ir = 0.0;
    double mdd = 0.0;
    double mld_years = 0.0;
    double mld_periods = 0.0;  // == mld_years * periods_per_year
    bool mld_unrecovered = false;
    double ir_star2 = 0.0;
    bool ir_star2_defined = false;
    bool ir_defined = false;
    // optional strategy-comparison tests
    bool has_dm = false;
    TestResult dm;
    bool has_ir_ttest = false;
    TestResult ir_t;
};

inline PerfReport compute_report(const EquityCurve& equity, const MetricConfig& cfg) {
    cfg.validate();
    if (equity.size() < 2) throw std::invalid_argument("compute_report: need at least 2 equity points");
    PerfReport rep;
    rep.cumulative_return = equity.values.back() / equity.values.front() - 1.0;
    const double years = static_cast<double>(equity.size() - 1) / cfg.periods_per_year;
    rep.arc = arc(equity, years);
    const auto rets = equity.simple_returns();
    rep.asd = asd(rets, cfg.periods_per_year);
    rep.ir_defined = rep.asd > 0.0;
    rep.ir = rep.ir_defined ? rep.arc / rep.asd : 0.0;
    rep.mdd = mdd(equity);
    const auto loss_dur = mld(equity, cfg.periods_per_year);
    rep.mld_years = loss_dur.years;
    rep.mld_periods = loss_dur.periods;
    rep.mld_unrecovered = loss_dur.unrecovered;
    rep.ir_star2_defined = rep.ir_defined && rep.mdd > 0.0;
    rep.ir_star2 = rep.ir_star2_defined ? ir_star2(rep.arc, rep.asd, rep.mdd) : 0.0;
    return rep;
}

}  // namespace saelab
