#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "saelab/backtest.hpp"
#include "saelab/csv.hpp"
#include "saelab/ingest.hpp"
#include "saelab/metrics.hpp"
#include "saelab/walkforward.hpp"

namespace saelab {

// Full configuration of one pipeline run. Serialized as flat `key = value`
// lines with dotted section paths; the on-disk effective config always
// materializes every field, so reloading it reproduces an identical run.
struct RunConfig {
    std::string bars_file;
    std::string symbol = "ASSET";
    std::vector<std::pair<std::string, std::string>> feature_files;  // name -> path
    bool include_close_feature = true;
    int resample_minutes = 0;  // 0 = keep native frequency

    int approach = 4;

    double label_lambda = 0.002;
    int label_horizon = 20;
    bool label_use_high_low = false;
    double phi_delta = 20.0;

    double fd_alpha = 0.01;
    double fd_tau = 1e-5;
    int fd_max_weights = 1000;
    double fd_grid_start = 0.0;
    double fd_grid_stop = 1.0;
    double fd_grid_step = 0.05;
    int fd_adf_lags = 1;
    std::string fd_lag_policy = "fixed";  // fixed | aic

    double sae_bottleneck_fraction = 0.4;
    int sae_encoder_hidden_layers = 1;
    int sae_decoder_hidden_layers = 1;
    int sae_classifier_hidden_layers = 1;
    std::string sae_activation;   // empty = approach default (tanh for 1-2, swish for 3-4)
    double sae_noise_rate = -1.0; // < 0 = approach default (0 for 1-2, 0.05 for 3-4)
    double sae_loss_mix = -1.0;   // < 0 = approach default (0 for 1-2, 0.5 for 3-4)
    int sae_epochs = 50;
    double sae_learning_rate = 0.01;
    double sae_momentum = 0.0;
    int sae_batch_size = 32;

    int wf_period_bars = 0;  // required
    int wf_initial_train_periods = 1;
    int wf_max_train_periods = 3;  // 0 = unbounded

    // per-split hyperparameter search (all axes empty = disabled)
    double tune_validation_fraction = 0.2;
    std::vector<double> tune_learning_rates;
    std::vector<int> tune_batch_sizes;
    std::vector<double> tune_noise_rates;
    std::vector<double> tune_bottleneck_fractions;

    double cost_per_side = 0.00005;
    double initial_capital = 1000.0;

    double periods_per_year = 0.0;  // 0 = infer from bar frequency

    std::uint64_t seed = 42;
    std::string out_dir = "out";

    std::string resolved_activation() const {
        if (!sae_activation.empty()) return sae_activation;
        return approach <= 2 ? "tanh" : "swish";
    }
    double resolved_noise_rate() const {
        if (sae_noise_rate >= 0.0) return sae_noise_rate;
        return approach <= 2 ? 0.0 : 0.05;
    }
    double resolved_loss_mix() const {
        if (sae_loss_mix >= 0.0) return sae_loss_mix;
        return approach <= 2 ? 0.0 : 0.5;
    }

    void validate() const {
        if (approach < 1 || approach > 4)
            throw std::invalid_argument("config: approach must be in {1,2,3,4}");
        if (bars_file.empty()) throw std::invalid_argument("config: data.bars is required");
        if (wf_period_bars < 2) throw std::invalid_argument("config: walkforward.period_bars must be >= 2");
        if (fd_lag_policy != "fixed" && fd_lag_policy != "aic")
            throw std::invalid_argument("config: fracdiff.lag_policy must be fixed or aic");
        const std::string act = resolved_activation();
        if (act != "tanh" && act != "swish" && act != "identity")
            throw std::invalid_argument("config: sae.activation must be tanh, swish or identity");
        if (!include_close_feature && feature_files.empty())
            throw std::invalid_argument("config: no features configured");
    }
};

namespace detail {

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "data.bars", "data.symbol", "data.features", "data.include_close_feature",
        "data.resample_minutes", "approach", "label.lambda", "label.horizon",
        "label.use_high_low", "phi.delta", "fracdiff.alpha", "fracdiff.tau",
        "fracdiff.max_weights", "fracdiff.grid_start", "fracdiff.grid_stop",
        "fracdiff.grid_step", "fracdiff.adf_lags", "fracdiff.lag_policy",
        "sae.bottleneck_fraction", "sae.encoder_hidden_layers", "sae.decoder_hidden_layers",
        "sae.classifier_hidden_layers", "sae.activation", "sae.noise_rate", "sae.loss_mix",
        "sae.epochs", "sae.learning_rate", "sae.momentum", "sae.batch_size",
        "walkforward.period_bars", "walkforward.initial_train_periods",
        "walkforward.max_train_periods", "tune.validation_fraction", "tune.learning_rates",
        "tune.batch_sizes", "tune.noise_rates", "tune.bottleneck_fractions",
        "backtest.cost_per_side", "backtest.initial_capital",
        "metrics.periods_per_year", "seed", "out"};
    return keys;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: bad boolean '" + v + "' for " + key);
}

inline std::vector<double> parse_double_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    for (const auto& item : split_csv_line(v, ',')) out.push_back(parse_double(item, key));
    return out;
}

inline std::vector<int> parse_intl_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    if (trim(v).empty()) return out;
    for (const auto& item : split_csv_line(v, ',')) out.push_back(static_cast<int>(parse_int(item, key)));
    return out;
}

template <class T>
inline std::string join_list(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        if constexpr (std::is_same_v<T, double>) s += format_double(v[i]);
        else s += std::to_string(v[i]);
    }
    return s;
}

inline std::vector<std::pair<std::string, std::string>> parse_feature_list(const std::string& v) {
    std::vector<std::pair<std::string, std::string>> out;
    if (trim(v).empty()) return out;
    for (const auto& item : split_csv_line(v, ',')) {
        const auto pos = item.find(':');
        if (pos == std::string::npos)
            throw std::invalid_argument("config: feature entry '" + item + "' must be name:path");
        out.emplace_back(trim(item.substr(0, pos)), trim(item.substr(pos + 1)));
    }
    return out;
}

inline std::string feature_list_string(const std::vector<std::pair<std::string, std::string>>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += v[i].first + ":" + v[i].second;
    }
    return s;
}

}  // namespace detail

// Applies one `key = value` assignment. Unknown keys are an error.
inline void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    const std::string ctx = "config key " + key;
    if (key == "data.bars") cfg.bars_file = v;
    else if (key == "data.symbol") cfg.symbol = v;
    else if (key == "data.features") cfg.feature_files = detail::parse_feature_list(v);
    else if (key == "data.include_close_feature") cfg.include_close_feature = detail::parse_bool(v, key);
    else if (key == "data.resample_minutes") cfg.resample_minutes = static_cast<int>(parse_int(v, ctx));
    else if (key == "approach") cfg.approach = static_cast<int>(parse_int(v, ctx));
    else if (key == "label.lambda") cfg.label_lambda = parse_double(v, ctx);
    else if (key == "label.horizon") cfg.label_horizon = static_cast<int>(parse_int(v, ctx));
    else if (key == "label.use_high_low") cfg.label_use_high_low = detail::parse_bool(v, key);
    else if (key == "phi.delta") cfg.phi_delta = parse_double(v, ctx);
    else if (key == "fracdiff.alpha") cfg.fd_alpha = parse_double(v, ctx);
    else if (key == "fracdiff.tau") cfg.fd_tau = parse_double(v, ctx);
    else if (key == "fracdiff.max_weights") cfg.fd_max_weights = static_cast<int>(parse_int(v, ctx));
    else if (key == "fracdiff.grid_start") cfg.fd_grid_start = parse_double(v, ctx);
    else if (key == "fracdiff.grid_stop") cfg.fd_grid_stop = parse_double(v, ctx);
    else if (key == "fracdiff.grid_step") cfg.fd_grid_step = parse_double(v, ctx);
    else if (key == "fracdiff.adf_lags") cfg.fd_adf_lags = static_cast<int>(parse_int(v, ctx));
    else if (key == "fracdiff.lag_policy") cfg.fd_lag_policy = v;
    else if (key == "sae.bottleneck_fraction") cfg.sae_bottleneck_fraction = parse_double(v, ctx);
    else if (key == "sae.encoder_hidden_layers") cfg.sae_encoder_hidden_layers = static_cast<int>(parse_int(v, ctx));
    else if (key == "sae.decoder_hidden_layers") cfg.sae_decoder_hidden_layers = static_cast<int>(parse_int(v, ctx));
    else if (key == "sae.classifier_hidden_layers") cfg.sae_classifier_hidden_layers = static_cast<int>(parse_int(v, ctx));
    else if (key == "sae.activation") cfg.sae_activation = v;
    else if (key == "sae.noise_rate") cfg.sae_noise_rate = parse_double(v, ctx);
    else if (key == "sae.loss_mix") cfg.sae_loss_mix = parse_double(v, ctx);
    else if (key == "sae.epochs") cfg.sae_epochs = static_cast<int>(parse_int(v, ctx));
    else if (key == "sae.learning_rate") cfg.sae_learning_rate = parse_double(v, ctx);
    else if (key == "sae.momentum") cfg.sae_momentum = parse_double(v, ctx);
    else if (key == "sae.batch_size") cfg.sae_batch_size = static_cast<int>(parse_int(v, ctx));
    else if (key == "walkforward.period_bars") cfg.wf_period_bars = static_cast<int>(parse_int(v, ctx));
    else if (key == "walkforward.initial_train_periods") cfg.wf_initial_train_periods = static_cast<int>(parse_int(v, ctx));
    else if (key == "walkforward.max_train_periods") cfg.wf_max_train_periods = static_cast<int>(parse_int(v, ctx));
    else if (key == "tune.validation_fraction") cfg.tune_validation_fraction = parse_double(v, ctx);
    else if (key == "tune.learning_rates") cfg.tune_learning_rates = detail::parse_double_list(v, ctx);
    else if (key == "tune.batch_sizes") cfg.tune_batch_sizes = detail::parse_intl_list(v, ctx);
    else if (key == "tune.noise_rates") cfg.tune_noise_rates = detail::parse_double_list(v, ctx);
    else if (key == "tune.bottleneck_fractions") cfg.tune_bottleneck_fractions = detail::parse_double_list(v, ctx);
    else if (key == "backtest.cost_per_side") cfg.cost_per_side = parse_double(v, ctx);
    else if (key == "backtest.initial_capital") cfg.initial_capital = parse_double(v, ctx);
    else if (key == "metrics.periods_per_year") cfg.periods_per_year = parse_double(v, ctx);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(v, ctx));
    else if (key == "out") cfg.out_dir = v;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

inline RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty() || line[0] == '#') continue;
        const auto pos = line.find('=');
        if (pos == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": expected key = value");
        apply_config_value(cfg, trim(line.substr(0, pos)), line.substr(pos + 1));
    }
    return cfg;
}

// Serializes every field, with approach-dependent fields resolved to their
// effective values. Loading the result reproduces the identical run.
inline std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "data.bars = " << cfg.bars_file << "\n";
    os << "data.symbol = " << cfg.symbol << "\n";
    os << "data.features = " << detail::feature_list_string(cfg.feature_files) << "\n";
    os << "data.include_close_feature = " << (cfg.include_close_feature ? "true" : "false") << "\n";
    os << "data.resample_minutes = " << cfg.resample_minutes << "\n";
    os << "approach = " << cfg.approach << "\n";
    os << "label.lambda = " << format_double(cfg.label_lambda) << "\n";
    os << "label.horizon = " << cfg.label_horizon << "\n";
    os << "label.use_high_low = " << (cfg.label_use_high_low ? "true" : "false") << "\n";
    os << "phi.delta = " << format_double(cfg.phi_delta) << "\n";
    os << "fracdiff.alpha = " << format_double(cfg.fd_alpha) << "\n";
    os << "fracdiff.tau = " << format_double(cfg.fd_tau) << "\n";
    os << "fracdiff.max_weights = " << cfg.fd_max_weights << "\n";
    os << "fracdiff.grid_start = " << format_double(cfg.fd_grid_start) << "\n";
    os << "fracdiff.grid_stop = " << format_double(cfg.fd_grid_stop) << "\n";
    os << "fracdiff.grid_step = " << format_double(cfg.fd_grid_step) << "\n";
    os << "fracdiff.adf_lags = " << cfg.fd_adf_lags << "\n";
    os << "fracdiff.lag_policy = " << cfg.fd_lag_policy << "\n";
    os << "sae.bottleneck_fraction = " << format_double(cfg.sae_bottleneck_fraction) << "\n";
    os << "sae.encoder_hidden_layers = " << cfg.sae_encoder_hidden_layers << "\n";
    os << "sae.decoder_hidden_layers = " << cfg.sae_decoder_hidden_layers << "\n";
    os << "sae.classifier_hidden_layers = " << cfg.sae_classifier_hidden_layers << "\n";
    os << "sae.activation = " << cfg.resolved_activation() << "\n";
    os << "sae.noise_rate = " << format_double(cfg.resolved_noise_rate()) << "\n";
    os << "sae.loss_mix = " << format_double(cfg.resolved_loss_mix()) << "\n";
    os << "sae.epochs = " << cfg.sae_epochs << "\n";
    os << "sae.learning_rate = " << format_double(cfg.sae_learning_rate) << "\n";
    os << "sae.momentum = " << format_double(cfg.sae_momentum) << "\n";
    os << "sae.batch_size = " << cfg.sae_batch_size << "\n";
    os << "walkforward.period_bars = " << cfg.wf_period_bars << "\n";
    os << "walkforward.initial_train_periods = " << cfg.wf_initial_train_periods << "\n";
    os << "walkforward.max_train_periods = " << cfg.wf_max_train_periods << "\n";
    os << "tune.validation_fraction = " << format_double(cfg.tune_validation_fraction) << "\n";
    os << "tune.learning_rates = " << detail::join_list(cfg.tune_learning_rates) << "\n";
    os << "tune.batch_sizes = " << detail::join_list(cfg.tune_batch_sizes) << "\n";
    os << "tune.noise_rates = " << detail::join_list(cfg.tune_noise_rates) << "\n";
    os << "tune.bottleneck_fractions = " << detail::join_list(cfg.tune_bottleneck_fractions) << "\n";
    os << "backtest.cost_per_side = " << format_double(cfg.cost_per_side) << "\n";
    os << "backtest.initial_capital = " << format_double(cfg.initial_capital) << "\n";
    os << "metrics.periods_per_year = " << format_double(cfg.periods_per_year) << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "out = " << cfg.out_dir << "\n";
    return os.str();
}

// FNV-1a 64 digest of the serialized effective config, stamped into every
// output header together with the master seed. The output directory is not
// part of the experiment, so the `out` line is excluded: runs differing only
// in destination produce byte-identical artifacts.
inline std::string config_digest(const RunConfig& cfg) {
    std::string s = serialize_config(cfg);
    const auto pos = s.find("\nout = ");
    if (pos != std::string::npos) {
        const auto end = s.find('\n', pos + 1);
        s.erase(pos, end == std::string::npos ? std::string::npos : end - pos);
    }
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct RunResult {
    RunConfig config;
    WalkForwardResult walkforward;
    EquityCurve equity;
    std::vector<TradeRecord> trades;
    PerfReport report;
    double periods_per_year = 0.0;
};

namespace detail {

inline std::string output_header(const RunConfig& cfg) {
    return "# saelab seed=" + std::to_string(cfg.seed) + " config=" + config_digest(cfg) + "\n";
}

inline TargetSpec target_for_approach(const RunConfig& cfg) {
    TargetSpec t;
    switch (cfg.approach) {
        case 1: t.kind = TargetKind::NextReturn; break;
        case 2:
        case 3: t.kind = TargetKind::NextDirection; break;
        default: t.kind = TargetKind::TripleBarrier; break;
    }
    t.tbl.lambda = cfg.label_lambda;
    t.tbl.horizon = cfg.label_horizon;
    t.phi.lambda = cfg.label_lambda;
    t.phi.delta = cfg.phi_delta;
    return t;
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "swish") return Activation::Swish;
    if (s == "identity") return Activation::Identity;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

inline SAEConfig sae_for_config(const RunConfig& cfg) {
    SAEConfig s;
    s.bottleneck_fraction = cfg.sae_bottleneck_fraction;
    s.encoder_hidden_layers = cfg.sae_encoder_hidden_layers;
    s.decoder_hidden_layers = cfg.sae_decoder_hidden_layers;
    s.classifier_hidden_layers = cfg.sae_classifier_hidden_layers;
    s.activation = activation_from_string(cfg.resolved_activation());
    s.noise_rate = cfg.resolved_noise_rate();
    s.loss_mix = cfg.resolved_loss_mix();
    s.epochs = cfg.sae_epochs;
    s.learning_rate = cfg.sae_learning_rate;
    s.momentum = cfg.sae_momentum;
    s.batch_size = cfg.sae_batch_size;
    return s;
}

inline TuneSpec tune_for_config(const RunConfig& cfg) {
    TuneSpec t;
    t.validation_fraction = cfg.tune_validation_fraction;
    t.learning_rates = cfg.tune_learning_rates;
    t.batch_sizes = cfg.tune_batch_sizes;
    t.noise_rates = cfg.tune_noise_rates;
    t.bottleneck_fractions = cfg.tune_bottleneck_fractions;
    return t;
}

inline FracDiffConfig fracdiff_for_config(const RunConfig& cfg) {
    FracDiffConfig f;
    f.d_grid = default_d_grid(cfg.fd_grid_start, cfg.fd_grid_stop, cfg.fd_grid_step);
    f.alpha = cfg.fd_alpha;
    f.tau = cfg.fd_tau;
    f.max_weights = static_cast<std::size_t>(cfg.fd_max_weights);
    f.adf_lags = cfg.fd_adf_lags;
    f.lag_policy = cfg.fd_lag_policy == "aic" ? LagPolicy::Aic : LagPolicy::Fixed;
    return f;
}

inline BarSeries slice_bars(const BarSeries& bars, std::size_t begin, std::size_t end) {
    BarSeries out;
    out.symbol = bars.symbol;
    out.bar_seconds = bars.bar_seconds;
    out.has_volume = bars.has_volume;
    out.timestamps.assign(bars.timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          bars.timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    auto copy = [&](const std::vector<double>& src, std::vector<double>& dst) {
        dst.assign(src.begin() + static_cast<std::ptrdiff_t>(begin),
                   src.begin() + static_cast<std::ptrdiff_t>(end));
    };
    copy(bars.open, out.open);
    copy(bars.high, out.high);
    copy(bars.low, out.low);
    copy(bars.close, out.close);
    copy(bars.volume, out.volume);
    return out;
}

}  // namespace detail

inline double infer_periods_per_year(const BarSeries& bars) {
    if (bars.bar_seconds <= 0) return 252.0;
    return 365.25 * 86400.0 / static_cast<double>(bars.bar_seconds);
}

inline void write_run_outputs(const RunResult& res);

// Executes ingest -> per-split fracdiff + training -> out-of-sample backtest
// -> metrics for one configuration. Everything is computed before the first
// byte is written, so a failed run leaves no partial outputs.
inline RunResult run_approach(const RunConfig& cfg, bool write_outputs = true) {
    cfg.validate();

    BarSeries bars = load_bars(cfg.bars_file, cfg.symbol);
    if (cfg.resample_minutes > 0 &&
        static_cast<std::int64_t>(cfg.resample_minutes) * 60 != bars.bar_seconds)
        bars = resample(bars, cfg.resample_minutes);

    std::vector<FeatureSeries> features;
    if (cfg.include_close_feature) {
        FeatureSeries close_f;
        close_f.name = "close";
        close_f.timestamps = bars.timestamps;
        close_f.values = bars.close;
        features.push_back(std::move(close_f));
    }
    for (const auto& [name, path] : cfg.feature_files)
        features.push_back(load_feature_series(path, name));

    const FeatureFrame frame = align_features(bars, features, AlignPolicy::ForwardFill);
    const WalkForwardPlan plan =
        make_splits(frame.timestamps.size(), static_cast<std::size_t>(cfg.wf_period_bars),
                    static_cast<std::size_t>(cfg.wf_max_train_periods),
                    static_cast<std::size_t>(cfg.wf_initial_train_periods));
    const TargetSpec target = detail::target_for_approach(cfg);
    const SAEConfig sae_base = detail::sae_for_config(cfg);
    const FracDiffConfig fd = detail::fracdiff_for_config(cfg);

    RunResult res;
    res.config = cfg;
    res.walkforward = run_walkforward(bars, frame, plan, fd, target, sae_base, cfg.seed,
                                      detail::tune_for_config(cfg));

    // out-of-sample rows of the frame, aligned with the concatenated predictions
    std::size_t frame_offset = 0;
    while (bars.timestamps[frame_offset] != frame.timestamps[0]) ++frame_offset;
    const std::size_t oos_begin = frame_offset + plan.splits.front().test_begin;
    const std::size_t oos_end = frame_offset + plan.splits.back().test_end;
    const BarSeries oos_bars = detail::slice_bars(bars, oos_begin, oos_end);

    CostModel costs{cfg.cost_per_side};
    if (cfg.approach == 4) {
        std::vector<int> signals(res.walkforward.predictions.size());
        for (std::size_t i = 0; i < signals.size(); ++i)
            signals[i] = static_cast<int>(res.walkforward.predictions[i]);
        LabelSpec spec{cfg.label_lambda, cfg.label_horizon};
        auto sim = simulate_tbl(signals, oos_bars, spec, costs, cfg.initial_capital,
                                cfg.label_use_high_low);
        res.equity = std::move(sim.equity);
        res.trades = std::move(sim.trades);
    } else {
        const PositionMode mode =
            cfg.approach == 1 ? PositionMode::RegressionSign : PositionMode::Binary;
        const auto positions = to_positions(res.walkforward.predictions, mode);
        res.equity = simulate(positions, oos_bars.close, oos_bars.timestamps, costs,
                              cfg.initial_capital);
    }

    res.periods_per_year =
        cfg.periods_per_year > 0.0 ? cfg.periods_per_year : infer_periods_per_year(bars);
    res.report = compute_report(res.equity, MetricConfig{res.periods_per_year});

    if (write_outputs) write_run_outputs(res);
    return res;
}

inline nlohmann::ordered_json report_to_json(const PerfReport& r) {
    nlohmann::ordered_json j;
    j["cumulative_return"] = r.cumulative_return;
    j["arc"] = r.arc;
    j["asd"] = r.asd;
    j["ir"] = r.ir_defined ? nlohmann::ordered_json(r.ir) : nlohmann::ordered_json(nullptr);
    j["mdd"] = r.mdd;
    j["mld_years"] = r.mld_years;
    j["mld_periods"] = r.mld_periods;
    j["mld_unrecovered"] = r.mld_unrecovered;
    j["ir_star2"] =
        r.ir_star2_defined ? nlohmann::ordered_json(r.ir_star2) : nlohmann::ordered_json(nullptr);
    if (r.has_dm) {
        j["dm_statistic"] = r.dm.statistic;
        j["dm_p_value"] = r.dm.p_value;
    }
    if (r.has_ir_ttest) {
        j["ir_ttest_statistic"] = r.ir_t.statistic;
        j["ir_ttest_p_value"] = r.ir_t.p_value;
    }
    return j;
}

// Plain-text block in the layout of the per-approach result tables.
inline std::string report_to_text(const std::string& title, const PerfReport& r) {
    auto pct = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f%%", v * 100.0);
        return std::string(buf);
    };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << title << "\n";
    os << "Cumulative Return  " << pct(r.cumulative_return) << "\n";
    os << "Annual Return      " << pct(r.arc) << "\n";
    os << "Annualized Std     " << pct(r.asd) << "\n";
    os << "Information Ratio  " << (r.ir_defined ? num(r.ir) : "n/a") << "\n";
    os << "Max Drawdown       " << pct(r.mdd) << "\n";
    os << "MLD                " << num(r.mld_periods) << " periods (" << num(r.mld_years)
       << " years)" << (r.mld_unrecovered ? " [unrecovered]" : "") << "\n";
    os << "IR**               " << (r.ir_star2_defined ? num(r.ir_star2) : "n/a") << "\n";
    return os.str();
}

inline void write_run_outputs(const RunResult& res) {
    namespace fs = std::filesystem;
    const RunConfig& cfg = res.config;
    fs::create_directories(cfg.out_dir);
    const std::string head = detail::output_header(cfg);
    auto path = [&](const char* name) { return (fs::path(cfg.out_dir) / name).string(); };

    {
        std::ostringstream os;
        os << head << "timestamp,prediction\n";
        for (std::size_t i = 0; i < res.walkforward.predictions.size(); ++i)
            os << res.walkforward.timestamps[i] << "," << format_double(res.walkforward.predictions[i])
               << "\n";
        write_text_file(path("predictions.csv"), os.str());
    }
    {
        std::ostringstream os;
        os << head << "timestamp,value\n";
        for (std::size_t i = 0; i < res.equity.size(); ++i)
            os << res.equity.timestamps[i] << "," << format_double(res.equity.values[i]) << "\n";
        write_text_file(path("equity.csv"), os.str());
    }
    {
        std::ostringstream os;
        os << head << "entry_ts,exit_ts,direction,exit_reason,gross_return,net_return\n";
        for (const auto& t : res.trades)
            os << t.entry_ts << "," << t.exit_ts << "," << t.direction << ","
               << exit_reason_name(t.reason) << "," << format_double(t.gross_return) << ","
               << format_double(t.net_return) << "\n";
        write_text_file(path("trades.csv"), os.str());
    }
    {
        nlohmann::ordered_json j;
        j["seed"] = cfg.seed;
        j["config_digest"] = config_digest(cfg);
        j["splits"] = nlohmann::ordered_json::array();
        for (const auto& s : res.walkforward.splits) {
            nlohmann::ordered_json js;
            js["index"] = s.index;
            js["seed"] = s.seed;
            js["train_begin"] = s.range.train_begin;
            js["train_end"] = s.range.train_end;
            js["test_begin"] = s.range.test_begin;
            js["test_end"] = s.range.test_end;
            js["d_by_feature"] = nlohmann::ordered_json::object();
            for (const auto& f : s.feature_fits) {
                nlohmann::ordered_json jf;
                jf["d"] = f.spec.d;
                jf["adf_stat"] = f.adf_stat;
                jf["p_value"] = f.p_value;
                jf["corr"] = f.correlation;
                jf["window"] = f.spec.weights.size();
                js["d_by_feature"][f.name] = jf;
            }
            if (s.has_tune) {
                js["tune"] = {{"learning_rate", s.tune.learning_rate},
                              {"batch_size", s.tune.batch_size},
                              {"noise_rate", s.tune.noise_rate},
                              {"bottleneck_fraction", s.tune.bottleneck_fraction},
                              {"validation_loss", s.tune.validation_loss},
                              {"candidate_index", s.tune.candidate_index},
                              {"candidates", s.tune.candidates}};
            }
            js["epoch_loss"] = nlohmann::ordered_json::array();
            for (const auto& e : s.model.training_log)
                js["epoch_loss"].push_back(
                    {{"epoch", e.epoch}, {"total", e.total}, {"recon", e.recon}, {"task", e.task}});
            if (s.has_train_phi) {
                js["train_phi"] = s.train_phi;
                js["train_counts"] = {{"dcc", s.train_counts.dcc},
                                      {"dic", s.train_counts.dic},
                                      {"tec", s.train_counts.tec}};
            }
            j["splits"].push_back(js);
        }
        write_text_file(path("splits.json"), j.dump(2) + "\n");
    }
    {
        nlohmann::ordered_json j;
        j["seed"] = cfg.seed;
        j["config_digest"] = config_digest(cfg);
        j["approach"] = cfg.approach;
        j["symbol"] = cfg.symbol;
        j["periods_per_year"] = res.periods_per_year;
        j["n_predictions"] = res.walkforward.predictions.size();
        j["n_trades"] = res.trades.size();
        j["metrics"] = report_to_json(res.report);
        write_text_file(path("report.json"), j.dump(2) + "\n");
    }
    write_text_file(path("report.txt"),
                    head + report_to_text("Approach " + std::to_string(cfg.approach) + " - " +
                                              cfg.symbol,
                                          res.report));
    write_text_file(path("config.effective"), head + serialize_config(cfg));
}

// ---- parameter sweeps -------------------------------------------------------

struct SweepGrid {
    // insertion-ordered axes: config key -> values
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
};

struct SweepCellResult {
    std::size_t index = 0;
    std::vector<std::string> values;
    PerfReport report;
};

// One full deterministic run per grid cell; cell seeds derive from the master
// seed and the cell index. Emits `sweep.csv`, one row per cell, with the grid
// coordinates and the headline metrics.
inline std::vector<SweepCellResult> sweep(const RunConfig& base, const SweepGrid& grid,
                                          int jobs = 1, bool write_outputs = true) {
    if (grid.axes.empty()) throw std::invalid_argument("sweep: empty grid");
    const auto& known = detail::config_keys();
    for (const auto& [key, values] : grid.axes) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::invalid_argument("sweep: unknown config key '" + key + "'");
        if (key == "out") throw std::invalid_argument("sweep: 'out' cannot be swept");
        if (values.empty()) throw std::invalid_argument("sweep: empty value list for '" + key + "'");
    }

    std::size_t n_cells = 1;
    for (const auto& [key, values] : grid.axes) n_cells *= values.size();

    std::vector<SweepCellResult> results(n_cells);
    std::vector<std::string> errors(n_cells);
    std::mutex next_mutex;
    std::size_t next_cell = 0;

    auto run_cell = [&](std::size_t cell) {
        RunConfig cfg = base;
        std::size_t rem = cell;
        SweepCellResult out;
        out.index = cell;
        for (const auto& [key, values] : grid.axes) {
            const std::size_t pick = rem % values.size();
            rem /= values.size();
            apply_config_value(cfg, key, values[pick]);
            out.values.push_back(values[pick]);
        }
        // cell 0 keeps the master seed, so a 1x1 sweep reproduces run_approach
        cfg.seed = base.seed ^ static_cast<std::uint64_t>(cell);
        cfg.out_dir = (std::filesystem::path(base.out_dir) / ("cell_" + std::to_string(cell))).string();
        const RunResult r = run_approach(cfg, write_outputs);
        out.report = r.report;
        results[cell] = std::move(out);
    };

    auto worker = [&]() {
        while (true) {
            std::size_t cell;
            {
                std::lock_guard<std::mutex> lock(next_mutex);
                if (next_cell >= n_cells) return;
                cell = next_cell++;
            }
            try {
                run_cell(cell);
            } catch (const std::exception& e) {
                errors[cell] = e.what();
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(n_cells)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t c = 0; c < n_cells; ++c)
        if (!errors[c].empty())
            throw std::runtime_error("sweep cell " + std::to_string(c) + " failed: " + errors[c]);

    if (write_outputs) {
        std::filesystem::create_directories(base.out_dir);
        std::ostringstream os;
        os << detail::output_header(base) << "cell";
        for (const auto& [key, values] : grid.axes) os << "," << key;
        os << ",cumulative_return,arc,asd,ir,mdd,mld_years,ir_star2\n";
        for (const auto& r : results) {
            os << r.index;
            for (const auto& v : r.values) os << "," << v;
            const PerfReport& p = r.report;
            os << "," << format_double(p.cumulative_return) << "," << format_double(p.arc) << ","
               << format_double(p.asd) << "," << (p.ir_defined ? format_double(p.ir) : "nan") << ","
               << format_double(p.mdd) << "," << format_double(p.mld_years) << ","
               << (p.ir_star2_defined ? format_double(p.ir_star2) : "nan") << "\n";
        }
        write_text_file((std::filesystem::path(base.out_dir) / "sweep.csv").string(), os.str());
    }
    return results;
}

}  // namespace saelab
