#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace saelab {

// Barrier geometry for triple-barrier labeling: price barriers at
// entry * (1 +/- lambda), time barrier after `horizon` bars.
struct LabelSpec {
    double lambda = 0.002;
    int horizon = 20;

    void validate() const {
        if (!(lambda > 0.0)) throw std::invalid_argument("LabelSpec: lambda must be positive");
        if (lambda >= 1.0) throw std::invalid_argument("LabelSpec: lambda must be below 1");
        if (horizon < 1) throw std::invalid_argument("LabelSpec: horizon must be >= 1");
    }
};

struct LabelSeries {
    std::vector<int> values;  // entries in {-1, 0, +1}
    LabelSpec spec;
    std::size_t source_length = 0;
};

struct TradeOutcomeCounts {
    std::int64_t dcc = 0;  // direction called and hit
    std::int64_t dic = 0;  // direction called, opposite barrier hit
    std::int64_t tec = 0;  // direction called, timed exit
};

// Parameters of the timed-exit-penalized payoff metric. delta expresses how
// many timed exits weigh as much as one directly incorrect trade.
struct PhiParams {
    double lambda = 0.002;
    double delta = 20.0;

    void validate() const {
        if (!(lambda > 0.0) || lambda >= 1.0)
            throw std::invalid_argument("PhiParams: lambda must be in (0,1)");
        if (!(delta > lambda))
            throw std::invalid_argument("PhiParams: delta must exceed lambda");
    }
};

// Asymmetric extension point: upper barrier at entry * (1 + profit), lower at
// entry * (1 - stop). The standard labeling uses profit = stop = lambda.
inline std::vector<int> triple_barrier_labels_asymmetric(const std::vector<double>& closes,
                                                         double profit, double stop, int horizon,
                                                         const std::vector<double>* highs = nullptr,
                                                         const std::vector<double>* lows = nullptr) {
    if (!(profit > 0.0) || !(stop > 0.0) || stop >= 1.0)
        throw std::invalid_argument("triple_barrier_labels: barrier widths must be in (0,1)");
    if (horizon < 1) throw std::invalid_argument("triple_barrier_labels: horizon must be >= 1");
    const std::size_t n = closes.size();
    if (n < 2) throw std::invalid_argument("triple_barrier_labels: need at least 2 prices");
    for (double p : closes)
        if (!(p > 0.0)) throw std::invalid_argument("triple_barrier_labels: prices must be positive");
    const bool use_hl = highs != nullptr && lows != nullptr;
    if (use_hl && (highs->size() != n || lows->size() != n))
        throw std::invalid_argument("triple_barrier_labels: high/low length mismatch");

    std::vector<int> values(n - 1, 0);
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const double upper = closes[t] * (1.0 + profit);
        const double lower = closes[t] * (1.0 - stop);
        const std::size_t last = std::min(t + static_cast<std::size_t>(horizon), n - 1);
        int label = 0;
        for (std::size_t i = t; i <= last; ++i) {
            const double hi = use_hl ? (*highs)[i] : closes[i];
            const double lo = use_hl ? (*lows)[i] : closes[i];
            if (hi >= upper) {
                label = 1;
                break;
            }
            if (lo <= lower) {
                label = -1;
                break;
            }
        }
        values[t] = label;
    }
    return values;
}

// First-touch scan over close prices. The label for index t is +1 when the
// upper barrier is reached first within [t, min(t+horizon, last)], -1 for the
// lower barrier, 0 when the time barrier wins. The final index has no future
// bar and receives no label, so the output is one shorter than the input.
// Within one bar the upper barrier wins (only reachable in high/low mode).
inline LabelSeries triple_barrier_labels(const std::vector<double>& closes, const LabelSpec& spec,
                                         const std::vector<double>* highs = nullptr,
                                         const std::vector<double>* lows = nullptr) {
    spec.validate();
    LabelSeries out;
    out.spec = spec;
    out.source_length = closes.size();
    out.values =
        triple_barrier_labels_asymmetric(closes, spec.lambda, spec.lambda, spec.horizon, highs, lows);
    return out;
}

namespace detail {

inline void check_label_alphabet(const std::vector<int>& v, const char* who) {
    for (int x : v)
        if (x != -1 && x != 0 && x != 1)
            throw std::invalid_argument(std::string(who) + ": labels must be in {-1, 0, +1}");
}

}  // namespace detail

// Classifies every nonzero prediction as directly correct (same nonzero
// label), directly incorrect (opposite nonzero label) or a timed exit
// (true label 0). Zero predictions place no trade and count nowhere.
inline TradeOutcomeCounts payoff_counts(const std::vector<int>& predicted,
                                        const std::vector<int>& actual) {
    if (predicted.size() != actual.size())
        throw std::invalid_argument("payoff_counts: length mismatch");
    detail::check_label_alphabet(predicted, "payoff_counts");
    detail::check_label_alphabet(actual, "payoff_counts");
    TradeOutcomeCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] == 0) continue;
        if (actual[i] == 0)
            ++c.tec;
        else if (predicted[i] == actual[i])
            ++c.dcc;
        else
            ++c.dic;
    }
    return c;
}

// Multiplicative payoff metric:
//   (1+lambda)^DCC * (1-lambda)^DIC              (include_tec = false)
//   ... * (1 - lambda/delta)^TEC                 (include_tec = true)
inline double phi(const TradeOutcomeCounts& counts, const PhiParams& params, bool include_tec) {
    params.validate();
    if (counts.dcc < 0 || counts.dic < 0 || counts.tec < 0)
        throw std::invalid_argument("phi: negative counts");
    double value = std::pow(1.0 + params.lambda, static_cast<double>(counts.dcc)) *
                   std::pow(1.0 - params.lambda, static_cast<double>(counts.dic));
    if (include_tec)
        value *= std::pow(1.0 - params.lambda / params.delta, static_cast<double>(counts.tec));
    return value;
}

// Return bound for one prediction/label pair: an exact value for resolved
// trades, the open interval (-lambda, lambda) for timed exits.
struct PayoffCell {
    bool exact = true;
    double value = 0.0;  // when exact
    double lo = 0.0, hi = 0.0;  // open interval when !exact
};

inline PayoffCell payoff_table_cell(int predicted, int actual, double lambda) {
    detail::check_label_alphabet({predicted}, "payoff_table_cell");
    detail::check_label_alphabet({actual}, "payoff_table_cell");
    if (predicted == 0) return {true, 0.0, 0.0, 0.0};
    if (actual == 0) return {false, 0.0, -lambda, lambda};
    return {true, predicted == actual ? lambda : -lambda, 0.0, 0.0};
}

}  // namespace saelab
