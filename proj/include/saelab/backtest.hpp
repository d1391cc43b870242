#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "saelab/ingest.hpp"
#include "saelab/labeling.hpp"
#include "saelab/metrics.hpp"

namespace saelab {

// Proportional cost per side. Opening and closing are one leg each, so a
// long/short flip pays two legs.
struct CostModel {
    double per_side = 0.0;

    void validate() const {
        if (per_side < 0.0) throw std::invalid_argument("CostModel: cost must be >= 0");
        if (per_side >= 1.0) throw std::invalid_argument("CostModel: cost must be below 1");
    }
};

enum class PositionMode { RegressionSign, Binary, Ternary };

// Maps model predictions to per-bar positions in {-1, 0, +1}. In
// regression-sign mode a zero prediction holds the previous position
// (flat when there is none yet).
inline std::vector<int> to_positions(const std::vector<double>& predictions, PositionMode mode) {
    std::vector<int> pos(predictions.size(), 0);
    int prev = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double p = predictions[i];
        switch (mode) {
            case PositionMode::RegressionSign:
                pos[i] = p > 0.0 ? 1 : (p < 0.0 ? -1 : prev);
                break;
            case PositionMode::Binary:
                if (p != 1.0 && p != -1.0)
                    throw std::invalid_argument("to_positions: binary prediction outside {-1,+1} at index " +
                                                std::to_string(i));
                pos[i] = static_cast<int>(p);
                break;
            case PositionMode::Ternary:
                if (p != 1.0 && p != -1.0 && p != 0.0)
                    throw std::invalid_argument("to_positions: ternary prediction outside {-1,0,+1} at index " +
                                                std::to_string(i));
                pos[i] = static_cast<int>(p);
                break;
        }
        prev = pos[i];
    }
    return pos;
}

namespace detail {

inline int cost_legs(int from, int to) {
    if (from == to) return 0;
    if (from == 0 || to == 0) return 1;  // open or close
    return 2;                            // flip
}

}  // namespace detail

// Bar-to-bar simulation: position[t] earns close[t+1]/close[t] - 1, executed
// at the last close. The curve starts at the initial capital; a position
// change at bar t is charged multiplicatively, (1-c) per leg, in the step to
// bar t+1. A change at the final bar carries no exposure and costs nothing.
inline EquityCurve simulate(const std::vector<int>& positions, const std::vector<double>& closes,
                            const std::vector<std::int64_t>& timestamps, const CostModel& costs,
                            double initial_capital = 1000.0) {
    costs.validate();
    if (positions.size() != closes.size())
        throw std::invalid_argument("simulate: positions/closes length mismatch");
    if (!timestamps.empty() && timestamps.size() != closes.size())
        throw std::invalid_argument("simulate: timestamps length mismatch");
    if (positions.empty()) throw std::invalid_argument("simulate: empty input");
    for (int p : positions)
        if (p < -1 || p > 1) throw std::invalid_argument("simulate: position outside {-1,0,+1}");
    for (double c : closes)
        if (!(c > 0.0)) throw std::invalid_argument("simulate: closes must be positive");

    EquityCurve eq;
    eq.timestamps = timestamps;
    eq.initial_capital = initial_capital;
    eq.values.resize(positions.size());
    eq.values[0] = initial_capital;
    int prev_pos = 0;
    for (std::size_t t = 1; t < positions.size(); ++t) {
        const double ret = closes[t] / closes[t - 1] - 1.0;
        const int legs = detail::cost_legs(prev_pos, positions[t - 1]);
        eq.values[t] = eq.values[t - 1] * (1.0 + positions[t - 1] * ret) *
                       std::pow(1.0 - costs.per_side, legs);
        prev_pos = positions[t - 1];
    }
    return eq;
}

inline EquityCurve simulate(const std::vector<int>& positions, const std::vector<double>& closes,
                            const CostModel& costs, double initial_capital = 1000.0) {
    return simulate(positions, closes, {}, costs, initial_capital);
}

enum class ExitReason { TakeProfit, StopLoss, Timed };

inline const char* exit_reason_name(ExitReason r) {
    switch (r) {
        case ExitReason::TakeProfit: return "tp";
        case ExitReason::StopLoss: return "sl";
        case ExitReason::Timed: return "timed";
    }
    return "?";
}

struct TradeRecord {
    std::int64_t entry_ts = 0;
    std::int64_t exit_ts = 0;
    int direction = 0;  // +1 long, -1 short
    ExitReason reason = ExitReason::Timed;
    double gross_return = 0.0;  // before costs, signed by direction
    double net_return = 0.0;    // after two cost legs
};

struct TblSimResult {
    EquityCurve equity;
    std::vector<TradeRecord> trades;
};

// Trade-at-a-time execution for triple-barrier strategies. A nonzero signal
// opens a trade at that bar's close with take-profit / stop-loss at
// entry * (1 +/- lambda) and a timed exit `horizon` bars later; signals
// arriving while a trade is open are dropped. Barrier exits fill exactly at
// the barrier price. Close-only barrier checks by default; with
// use_high_low, a bar touching both barriers resolves to the stop.
// A fresh signal on the exit bar may re-enter the same bar.
inline TblSimResult simulate_tbl(const std::vector<int>& signals, const BarSeries& bars,
                                 const LabelSpec& spec, const CostModel& costs,
                                 double initial_capital = 1000.0, bool use_high_low = false) {
    spec.validate();
    costs.validate();
    const std::size_t n = bars.size();
    if (signals.size() != n) throw std::invalid_argument("simulate_tbl: signals/bars length mismatch");
    if (n == 0) throw std::invalid_argument("simulate_tbl: empty input");
    for (int s : signals)
        if (s < -1 || s > 1) throw std::invalid_argument("simulate_tbl: signal outside {-1,0,+1}");

    const double leg = 1.0 - costs.per_side;
    TblSimResult res;
    res.equity.timestamps = bars.timestamps;
    res.equity.initial_capital = initial_capital;
    res.equity.values.assign(n, initial_capital);

    double flat_equity = initial_capital;  // account value while out of the market
    bool in_trade = false;
    // state of the open trade
    double entry_price = 0.0, entry_equity = 0.0;
    int direction = 0;
    std::size_t entry_idx = 0, timed_idx = 0;

    auto mark = [&](std::size_t i, double value) { res.equity.values[i] = value; };

    for (std::size_t i = 0; i < n; ++i) {
        if (!in_trade) {
            mark(i, flat_equity);
            if (signals[i] != 0 && i + 1 < n) {
                in_trade = true;
                direction = signals[i];
                entry_price = bars.close[i];
                entry_equity = flat_equity;
                entry_idx = i;
                timed_idx = std::min(i + static_cast<std::size_t>(spec.horizon), n - 1);
            }
            continue;
        }

        // in a trade: check barriers at bar i (entry bar excluded: entry at close)
        const double upper = entry_price * (1.0 + spec.lambda);
        const double lower = entry_price * (1.0 - spec.lambda);
        const double hi = use_high_low ? bars.high[i] : bars.close[i];
        const double lo = use_high_low ? bars.low[i] : bars.close[i];

        bool exit_now = false;
        double exit_price = 0.0;
        ExitReason reason = ExitReason::Timed;

        const bool hit_upper = hi >= upper;
        const bool hit_lower = lo <= lower;
        if (hit_upper && hit_lower) {
            // both inside one bar: resolve pessimistically to the stop side
            exit_now = true;
            exit_price = direction > 0 ? lower : upper;
            reason = ExitReason::StopLoss;
        } else if (hit_upper) {
            exit_now = true;
            exit_price = upper;
            reason = direction > 0 ? ExitReason::TakeProfit : ExitReason::StopLoss;
        } else if (hit_lower) {
            exit_now = true;
            exit_price = lower;
            reason = direction > 0 ? ExitReason::StopLoss : ExitReason::TakeProfit;
        } else if (i >= timed_idx) {
            exit_now = true;
            exit_price = bars.close[i];
            reason = ExitReason::Timed;
        }

        if (!exit_now) {
            mark(i, entry_equity * leg * (1.0 + direction * (bars.close[i] / entry_price - 1.0)));
            continue;
        }

        // barrier fills are at entry * (1 +/- lambda) by construction, so their
        // gross return is +/- lambda exactly; recomputing it through the price
        // ratio would only reintroduce rounding
        const double gross = reason == ExitReason::Timed
                                 ? direction * (exit_price / entry_price - 1.0)
                                 : (reason == ExitReason::TakeProfit ? spec.lambda : -spec.lambda);
        const double net_equity = entry_equity * leg * (1.0 + gross) * leg;
        TradeRecord tr;
        tr.entry_ts = bars.timestamps[entry_idx];
        tr.exit_ts = bars.timestamps[i];
        tr.direction = direction;
        tr.reason = reason;
        tr.gross_return = gross;
        tr.net_return = net_equity / entry_equity - 1.0;
        res.trades.push_back(tr);

        flat_equity = net_equity;
        in_trade = false;
        mark(i, flat_equity);

        // same-bar re-entry on a fresh signal
        if (signals[i] != 0 && i + 1 < n) {
            in_trade = true;
            direction = signals[i];
            entry_price = bars.close[i];
            entry_equity = flat_equity;
            entry_idx = i;
            timed_idx = std::min(i + static_cast<std::size_t>(spec.horizon), n - 1);
        }
    }

    // the timed barrier is clipped at the last bar, so no trade survives the loop
    return res;
}

}  // namespace saelab
