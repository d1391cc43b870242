#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "saelab/fracdiff.hpp"
#include "saelab/ingest.hpp"
#include "saelab/labeling.hpp"
#include "saelab/sae.hpp"

namespace saelab {

// Half-open index ranges; a split's train range ends exactly where its test
// range begins.
struct SplitRange {
    std::size_t train_begin = 0, train_end = 0;
    std::size_t test_begin = 0, test_end = 0;
};

struct WalkForwardPlan {
    std::vector<SplitRange> splits;
    std::size_t period_length = 0;
    std::size_t max_train_periods = 0;  // 0 = unbounded
    std::size_t initial_train_periods = 1;
};

// Expanding-then-shifting walk-forward plan: split k trains on the most
// recent min(initial + k, max) whole periods before its single test period.
// The trailing partial period is dropped.
inline WalkForwardPlan make_splits(std::size_t total_bars, std::size_t period_length,
                                   std::size_t max_train_periods, std::size_t initial_train_periods) {
    if (period_length < 1) throw std::invalid_argument("make_splits: period_length must be >= 1");
    if (initial_train_periods < 1)
        throw std::invalid_argument("make_splits: initial_train_periods must be >= 1");
    if (max_train_periods != 0 && max_train_periods < initial_train_periods)
        throw std::invalid_argument("make_splits: max_train_periods below initial_train_periods");
    const std::size_t required = (initial_train_periods + 1) * period_length;
    if (total_bars < required)
        throw std::invalid_argument("make_splits: need at least " + std::to_string(required) +
                                    " bars, got " + std::to_string(total_bars));
    WalkForwardPlan plan;
    plan.period_length = period_length;
    plan.max_train_periods = max_train_periods;
    plan.initial_train_periods = initial_train_periods;
    const std::size_t whole_periods = total_bars / period_length;
    for (std::size_t p = initial_train_periods; p < whole_periods; ++p) {
        const std::size_t cap = max_train_periods == 0 ? p : std::min(p, max_train_periods);
        SplitRange r;
        r.train_begin = (p - cap) * period_length;
        r.train_end = p * period_length;
        r.test_begin = r.train_end;
        r.test_end = (p + 1) * period_length;
        plan.splits.push_back(r);
    }
    return plan;
}

enum class TargetKind { NextReturn, NextDirection, TripleBarrier };

struct TargetSpec {
    TargetKind kind = TargetKind::TripleBarrier;
    LabelSpec tbl;    // TripleBarrier mode
    PhiParams phi;    // train-set payoff reporting in TripleBarrier mode
};

struct FracDiffConfig {
    std::vector<double> d_grid = default_d_grid();
    double alpha = 0.01;
    double tau = 1e-5;
    std::size_t max_weights = 1000;
    int adf_lags = 1;
    LagPolicy lag_policy = LagPolicy::Fixed;
};

struct FeatureFit {
    std::string name;
    FracDiffSpec spec;  // fitted order with its realized weight window
    double adf_stat = 0.0;
    double p_value = 1.0;
    double correlation = 1.0;
};

// Deterministic per-split hyperparameter search standing in for trial-based
// tuning: the cartesian grid over the non-empty axes is trained on the head
// of the train slice and scored by task loss on its validation tail; the
// winner (first on ties) is refit on the whole train slice.
struct TuneSpec {
    double validation_fraction = 0.2;
    std::vector<double> learning_rates;
    std::vector<int> batch_sizes;
    std::vector<double> noise_rates;
    std::vector<double> bottleneck_fractions;

    bool enabled() const {
        return !(learning_rates.empty() && batch_sizes.empty() && noise_rates.empty() &&
                 bottleneck_fractions.empty());
    }

    void validate() const {
        if (!(validation_fraction > 0.0) || validation_fraction >= 1.0)
            throw std::invalid_argument("TuneSpec: validation_fraction must be in (0,1)");
    }
};

struct TuneChoice {
    double learning_rate = 0.0;
    int batch_size = 0;
    double noise_rate = 0.0;
    double bottleneck_fraction = 0.0;
    double validation_loss = 0.0;
    std::size_t candidate_index = 0;
    std::size_t candidates = 0;
};

struct SplitArtifacts {
    std::size_t index = 0;
    SplitRange range;
    std::uint64_t seed = 0;
    std::vector<FeatureFit> feature_fits;
    SAEModel model;  // includes the train-fitted scaler and training log
    bool has_tune = false;
    TuneChoice tune;
    bool has_train_phi = false;
    TradeOutcomeCounts train_counts;
    double train_phi = 1.0;
};

struct WalkForwardResult {
    std::vector<Timestamp> timestamps;   // concatenated test rows, chronological
    std::vector<double> predictions;     // meaning depends on the target kind
    std::vector<SplitArtifacts> splits;
};

namespace detail {

inline std::vector<double> column(const Matrix& m, std::size_t c, std::size_t begin, std::size_t end) {
    std::vector<double> out;
    out.reserve(end - begin);
    for (std::size_t r = begin; r < end; ++r) out.push_back(m(r, c));
    return out;
}

inline std::vector<SAEConfig> tune_candidates(const SAEConfig& base, const TuneSpec& tune) {
    auto lrs = tune.learning_rates.empty() ? std::vector<double>{base.learning_rate}
                                           : tune.learning_rates;
    auto batches = tune.batch_sizes.empty() ? std::vector<int>{base.batch_size} : tune.batch_sizes;
    auto noises = tune.noise_rates.empty() ? std::vector<double>{base.noise_rate}
                                           : tune.noise_rates;
    auto fracs = tune.bottleneck_fractions.empty() ? std::vector<double>{base.bottleneck_fraction}
                                                   : tune.bottleneck_fractions;
    std::vector<SAEConfig> out;
    for (double f : fracs)
        for (double n : noises)
            for (int b : batches)
                for (double lr : lrs) {
                    SAEConfig c = base;
                    c.learning_rate = lr;
                    c.batch_size = b;
                    c.noise_rate = n;
                    c.bottleneck_fraction = f;
                    out.push_back(c);
                }
    return out;
}

// Trains every candidate on the head of the train slice and scores the task
// loss on the held-out tail. Returns the winning candidate's config.
inline std::pair<SAEConfig, TuneChoice> tune_on_validation_tail(
    const std::vector<SAEConfig>& candidates, const TuneSpec& tune, const Matrix& x_train,
    const std::vector<double>& targets, std::uint64_t split_seed) {
    const std::size_t n = x_train.rows;
    const auto tail = static_cast<std::size_t>(std::ceil(tune.validation_fraction * n));
    if (tail == 0 || tail >= n)
        throw std::runtime_error("validation tail leaves no training rows");
    const std::size_t head = n - tail;

    const Matrix x_head = x_train.slice_rows(0, head);
    const Matrix x_tail = x_train.slice_rows(head, n);
    const std::vector<double> y_head(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(head));
    const std::vector<double> y_tail(targets.begin() + static_cast<std::ptrdiff_t>(head), targets.end());

    TuneChoice choice;
    choice.candidates = candidates.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        SAEConfig cfg = candidates[c];
        cfg.seed = derive_seed(split_seed, 0x74756e65, c);
        const SAEModel m = train(cfg, x_head, y_head);
        const Matrix tail_std = m.scaler.transform(x_tail);
        const double score = sae_loss(m, tail_std, tail_std, y_tail).task;
        if (score < best) {
            best = score;
            best_idx = c;
        }
    }
    const SAEConfig& won = candidates[best_idx];
    choice.learning_rate = won.learning_rate;
    choice.batch_size = won.batch_size;
    choice.noise_rate = won.noise_rate;
    choice.bottleneck_fraction = won.bottleneck_fraction;
    choice.validation_loss = best;
    choice.candidate_index = best_idx;
    return {won, choice};
}

}  // namespace detail

// Per-split pipeline: fit the minimal stationarizing d per feature on the
// train slice, apply that differencing to train and test (the convolution may
// reach back into earlier rows — past values only), fit standardization and
// the model on the train slice, and predict the test slice. Targets never
// read past the train range: triple-barrier labels are computed on the train
// slice alone with the horizon clipped at its last bar.
inline WalkForwardResult run_walkforward(const BarSeries& bars, const FeatureFrame& frame,
                                         const WalkForwardPlan& plan, const FracDiffConfig& fd,
                                         const TargetSpec& target, const SAEConfig& sae_base,
                                         std::uint64_t master_seed, const TuneSpec& tune = {}) {
    tune.validate();
    const std::size_t rows = frame.timestamps.size();
    if (rows == 0 || frame.names.empty())
        throw std::invalid_argument("run_walkforward: empty feature frame");
    if (plan.splits.empty()) throw std::invalid_argument("run_walkforward: empty plan");
    if (plan.splits.back().test_end > rows)
        throw std::invalid_argument("run_walkforward: plan exceeds frame length");

    // the frame must be a contiguous, timestamp-aligned slice of the bars
    std::size_t offset = 0;
    while (offset < bars.size() && bars.timestamps[offset] != frame.timestamps[0]) ++offset;
    if (offset + rows > bars.size())
        throw std::invalid_argument("run_walkforward: frame does not align with bars");
    for (std::size_t i = 0; i < rows; ++i)
        if (bars.timestamps[offset + i] != frame.timestamps[i])
            throw std::invalid_argument("run_walkforward: frame timestamps diverge from bars at row " +
                                        std::to_string(i));
    std::vector<double> closes(rows);
    for (std::size_t i = 0; i < rows; ++i) closes[i] = bars.close[offset + i];

    const std::size_t n_features = frame.names.size();
    WalkForwardResult result;

    for (std::size_t s = 0; s < plan.splits.size(); ++s) {
        const SplitRange& r = plan.splits[s];
        const std::uint64_t split_seed = master_seed ^ static_cast<std::uint64_t>(s);
        SplitArtifacts art;
        art.index = s;
        art.range = r;
        art.seed = split_seed;

        try {
            // (a) per-feature optimal d on the train slice, then full-history FFD
            Matrix ffd(rows, n_features, std::numeric_limits<double>::quiet_NaN());
            std::size_t max_window = 1;
            for (std::size_t j = 0; j < n_features; ++j) {
                const auto train_col = detail::column(frame.values, j, r.train_begin, r.train_end);
                const auto fit = optimal_d(train_col, fd.d_grid, fd.alpha, fd.tau, fd.max_weights,
                                           fd.adf_lags, fd.lag_policy);
                const auto& last = fit.diagnostics.back();

                FeatureFit ff;
                ff.name = frame.names[j];
                ff.spec.d = fit.d_star;
                ff.spec.tau = fd.tau;
                ff.spec.alpha = fd.alpha;
                ff.spec.weights = fd_weights(fit.d_star, fd.tau, fd.max_weights);
                ff.adf_stat = last.statistic;
                ff.p_value = last.p_value;
                ff.correlation = last.correlation;
                max_window = std::max(max_window, ff.spec.weights.size());

                const std::size_t m = ff.spec.weights.size();
                for (std::size_t t = m - 1; t < r.test_end; ++t) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < m; ++k)
                        acc += ff.spec.weights[k] * frame.values(t - k, j);
                    ffd(t, j) = acc;
                }
                art.feature_fits.push_back(std::move(ff));
            }

            const std::size_t eff_train_begin = std::max(r.train_begin, max_window - 1);
            const std::size_t train_limit = r.train_end - 1;  // last row with a target
            if (eff_train_begin >= train_limit)
                throw std::runtime_error("train slice shorter than the differencing warm-up window");
            if (r.test_begin < max_window - 1)
                throw std::runtime_error("test slice begins inside the differencing warm-up window");

            // (b) targets from the train slice only
            std::vector<double> targets;
            targets.reserve(train_limit - eff_train_begin);
            if (target.kind == TargetKind::TripleBarrier) {
                const std::vector<double> train_closes(closes.begin() + static_cast<std::ptrdiff_t>(r.train_begin),
                                                       closes.begin() + static_cast<std::ptrdiff_t>(r.train_end));
                const auto labels = triple_barrier_labels(train_closes, target.tbl);
                for (std::size_t t = eff_train_begin; t < train_limit; ++t)
                    targets.push_back(static_cast<double>(labels.values[t - r.train_begin]));
            } else {
                for (std::size_t t = eff_train_begin; t < train_limit; ++t) {
                    const double ret = closes[t + 1] / closes[t] - 1.0;
                    targets.push_back(target.kind == TargetKind::NextReturn ? ret
                                                                            : (ret > 0.0 ? 1.0 : -1.0));
                }
            }
            if (target.kind != TargetKind::NextReturn) {
                const double first = targets.front();
                bool single = true;
                for (double t : targets)
                    if (t != first) {
                        single = false;
                        break;
                    }
                if (single)
                    throw std::runtime_error("single-class training targets (all labels " +
                                             std::to_string(static_cast<int>(first)) + ")");
            }

            Matrix x_train(train_limit - eff_train_begin, n_features);
            for (std::size_t t = eff_train_begin; t < train_limit; ++t)
                for (std::size_t j = 0; j < n_features; ++j) x_train(t - eff_train_begin, j) = ffd(t, j);
            Matrix x_test(r.test_end - r.test_begin, n_features);
            for (std::size_t t = r.test_begin; t < r.test_end; ++t)
                for (std::size_t j = 0; j < n_features; ++j) x_test(t - r.test_begin, j) = ffd(t, j);

            // (c) model on the train slice, (d) out-of-sample predictions
            SAEConfig cfg = sae_base;
            cfg.input_dim = static_cast<int>(n_features);
            cfg.seed = split_seed;
            switch (target.kind) {
                case TargetKind::NextReturn: cfg.output_mode = OutputMode::Regression1; break;
                case TargetKind::NextDirection: cfg.output_mode = OutputMode::Binary2; break;
                case TargetKind::TripleBarrier: cfg.output_mode = OutputMode::Ternary3; break;
            }
            if (tune.enabled()) {
                const auto candidates = detail::tune_candidates(cfg, tune);
                auto [won, choice] = detail::tune_on_validation_tail(candidates, tune, x_train,
                                                                     targets, split_seed);
                won.seed = split_seed;
                cfg = won;
                art.tune = choice;
                art.has_tune = true;
            }
            art.model = train(cfg, x_train, targets);

            const auto test_pred = predict(art.model, x_test);
            for (std::size_t i = 0; i < test_pred.size(); ++i) {
                result.timestamps.push_back(frame.timestamps[r.test_begin + i]);
                result.predictions.push_back(test_pred[i]);
            }

            if (target.kind == TargetKind::TripleBarrier) {
                const auto train_pred = predict(art.model, x_train);
                std::vector<int> pred_i(train_pred.size()), act_i(targets.size());
                for (std::size_t i = 0; i < train_pred.size(); ++i)
                    pred_i[i] = static_cast<int>(train_pred[i]);
                for (std::size_t i = 0; i < targets.size(); ++i) act_i[i] = static_cast<int>(targets[i]);
                art.train_counts = payoff_counts(pred_i, act_i);
                art.train_phi = phi(art.train_counts, target.phi, /*include_tec=*/true);
                art.has_train_phi = true;
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("walk-forward split " + std::to_string(s) + " failed: " + e.what());
        }

        result.splits.push_back(std::move(art));
    }
    return result;
}

}  // namespace saelab
