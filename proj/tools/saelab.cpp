// Command-line front end for the saelab pipeline: data ingestion, labeling,
// fractional-differencing scans, full approach runs, parameter sweeps and
// performance reports.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "saelab/runner.hpp"

namespace {

using namespace saelab;

std::string default_header(std::uint64_t seed) {
    return "# saelab seed=" + std::to_string(seed) + "\n";
}

int cmd_ingest(const std::string& bars_path, const std::string& symbol, int resample_minutes,
               const std::string& out_file) {
    BarSeries bars = load_bars(bars_path, symbol);
    if (resample_minutes > 0) bars = resample(bars, resample_minutes);
    std::ostringstream os;
    os << "timestamp,open,high,low,close" << (bars.has_volume ? ",volume" : "") << "\n";
    for (std::size_t i = 0; i < bars.size(); ++i) {
        os << bars.timestamps[i] << "," << format_double(bars.open[i]) << ","
           << format_double(bars.high[i]) << "," << format_double(bars.low[i]) << ","
           << format_double(bars.close[i]);
        if (bars.has_volume) os << "," << format_double(bars.volume[i]);
        os << "\n";
    }
    write_text_file(out_file, os.str());
    std::cout << bars.size() << " bars (" << bars.frequency_minutes() << "m) -> " << out_file
              << "\n";
    return 0;
}

int cmd_label(const std::string& bars_path, double lambda, int horizon, bool use_high_low,
              const std::string& out_file) {
    const BarSeries bars = load_bars(bars_path, "ASSET");
    const LabelSpec spec{lambda, horizon};
    const LabelSeries labels =
        use_high_low ? triple_barrier_labels(bars.close, spec, &bars.high, &bars.low)
                     : triple_barrier_labels(bars.close, spec);
    std::ostringstream os;
    os << "timestamp,label\n";
    for (std::size_t t = 0; t < labels.values.size(); ++t)
        os << bars.timestamps[t] << "," << labels.values[t] << "\n";
    write_text_file(out_file, os.str());
    std::cout << labels.values.size() << " labels -> " << out_file << "\n";
    return 0;
}

int cmd_fracdiff_scan(const std::vector<std::string>& feature_args, const std::string& bars_path,
                      const std::string& symbol, double grid_start, double grid_stop,
                      double grid_step, double tau, int max_weights, int adf_lags,
                      const std::string& out_file) {
    std::vector<FeatureSeries> features;
    if (!bars_path.empty()) {
        const BarSeries bars = load_bars(bars_path, symbol);
        FeatureSeries f;
        f.name = symbol;
        f.timestamps = bars.timestamps;
        f.values = bars.close;
        features.push_back(std::move(f));
    }
    for (const auto& arg : feature_args) {
        const auto pos = arg.find(':');
        if (pos == std::string::npos)
            throw std::invalid_argument("--feature expects name:path, got '" + arg + "'");
        features.push_back(load_feature_series(arg.substr(pos + 1), arg.substr(0, pos)));
    }
    if (features.empty()) throw std::invalid_argument("fracdiff-scan: no inputs (use --feature/--bars)");

    const auto grid = default_d_grid(grid_start, grid_stop, grid_step);
    std::ostringstream os;
    os << "feature,d,adf_stat,p_value,corr\n";
    for (const auto& f : features) {
        for (double d : grid) {
            const auto transformed = ffd_transform(f.values, d, tau, static_cast<std::size_t>(max_weights));
            const auto adf = adf_test(transformed, adf_lags);
            const std::vector<double> tail(f.values.end() - static_cast<std::ptrdiff_t>(transformed.size()),
                                           f.values.end());
            double corr = 0.0;
            {
                // same overlap convention as optimal_d diagnostics
                const std::size_t n = transformed.size();
                double ma = 0, mb = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    ma += tail[i];
                    mb += transformed[i];
                }
                ma /= static_cast<double>(n);
                mb /= static_cast<double>(n);
                double saa = 0, sbb = 0, sab = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    saa += (tail[i] - ma) * (tail[i] - ma);
                    sbb += (transformed[i] - mb) * (transformed[i] - mb);
                    sab += (tail[i] - ma) * (transformed[i] - mb);
                }
                corr = (saa > 0 && sbb > 0) ? sab / std::sqrt(saa * sbb) : 0.0;
            }
            os << f.name << "," << format_double(d) << "," << format_double(adf.statistic) << ","
               << format_double(adf.p_value) << "," << format_double(corr) << "\n";
        }
    }
    write_text_file(out_file, os.str());
    std::cout << features.size() << " features x " << grid.size() << " d values -> " << out_file
              << "\n";
    return 0;
}

EquityCurve read_equity_csv(const std::string& path) {
    EquityCurve eq;
    const auto lines = read_lines(path);
    bool header_seen = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // timestamp,value
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 2) throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": bad row");
        eq.timestamps.push_back(parse_timestamp(f[0], path));
        eq.values.push_back(parse_double(f[1], path));
    }
    if (eq.values.empty()) throw std::runtime_error("no equity rows in " + path);
    eq.initial_capital = eq.values.front();
    return eq;
}

std::vector<double> read_loss_csv(const std::string& path) {
    std::vector<double> out;
    const auto lines = read_lines(path);
    bool header_seen = false;
    for (const auto& raw : lines) {
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto f = split_csv_line(line);
        out.push_back(parse_double(f.back(), path));
    }
    return out;
}

double infer_ppy_from_timestamps(const std::vector<Timestamp>& ts) {
    if (ts.size() < 2) return 252.0;
    std::int64_t g = 0;
    for (std::size_t i = 1; i < ts.size(); ++i) g = std::gcd(g, ts[i] - ts[i - 1]);
    if (g <= 0) return 252.0;
    return 365.25 * 86400.0 / static_cast<double>(g);
}

int cmd_report(const std::string& equity_path, double periods_per_year,
               const std::string& benchmark_path, const std::string& dm_a,
               const std::string& dm_b, const std::string& out_file) {
    const EquityCurve eq = read_equity_csv(equity_path);
    const double ppy = periods_per_year > 0.0 ? periods_per_year : infer_ppy_from_timestamps(eq.timestamps);
    PerfReport rep = compute_report(eq, MetricConfig{ppy});

    if (!benchmark_path.empty()) {
        const EquityCurve bench = read_equity_csv(benchmark_path);
        // align on common timestamps and compare per-period returns
        std::vector<double> ra, rb;
        std::size_t i = 0, j = 0;
        double prev_a = 0, prev_b = 0;
        bool have_prev = false;
        while (i < eq.size() && j < bench.size()) {
            if (eq.timestamps[i] < bench.timestamps[j]) ++i;
            else if (eq.timestamps[i] > bench.timestamps[j]) ++j;
            else {
                if (have_prev) {
                    ra.push_back(eq.values[i] / prev_a - 1.0);
                    rb.push_back(bench.values[j] / prev_b - 1.0);
                }
                prev_a = eq.values[i];
                prev_b = bench.values[j];
                have_prev = true;
                ++i;
                ++j;
            }
        }
        rep.ir_t = ir_ttest(ra, rb, ppy, /*one_sided=*/true);
        rep.has_ir_ttest = true;
    }
    if (!dm_a.empty() && !dm_b.empty()) {
        rep.dm = dm_test(read_loss_csv(dm_a), read_loss_csv(dm_b), /*one_sided=*/true);
        rep.has_dm = true;
    }

    nlohmann::ordered_json j;
    j["equity_file"] = equity_path;
    j["periods_per_year"] = ppy;
    j["metrics"] = report_to_json(rep);
    const std::string text = report_to_text("Report: " + equity_path, rep);
    std::cout << text;
    if (rep.has_ir_ttest)
        std::cout << "IR t-test          t=" << rep.ir_t.statistic << " p=" << rep.ir_t.p_value
                  << "\n";
    if (rep.has_dm)
        std::cout << "DM test            t=" << rep.dm.statistic << " p=" << rep.dm.p_value << "\n";
    if (!out_file.empty()) write_text_file(out_file, j.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"saelab - fractional differencing, triple-barrier labeling and SAE-MLP "
                 "walk-forward trading research"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate, sort and optionally resample a bar CSV");
    std::string in_bars, in_symbol = "ASSET", in_out = "bars_out.csv";
    int in_resample = 0;
    ingest->add_option("--bars", in_bars, "input bar CSV")->required();
    ingest->add_option("--symbol", in_symbol, "instrument symbol");
    ingest->add_option("--resample", in_resample, "target bar length in minutes");
    ingest->add_option("--out", in_out, "output CSV path");

    // label
    auto* label = app.add_subcommand("label", "triple-barrier labels for a bar CSV");
    std::string lb_bars, lb_out = "labels.csv";
    double lb_lambda = 0.002;
    int lb_horizon = 20;
    bool lb_hl = false;
    label->add_option("--bars", lb_bars, "input bar CSV")->required();
    label->add_option("--lambda", lb_lambda, "barrier width as price fraction");
    label->add_option("--horizon", lb_horizon, "time barrier in bars");
    label->add_flag("--use-high-low", lb_hl, "check barriers against bar highs/lows");
    label->add_option("--out", lb_out, "output CSV path");

    // fracdiff-scan
    auto* scan = app.add_subcommand("fracdiff-scan", "ADF p-value / correlation sweep over d");
    std::vector<std::string> sc_features;
    std::string sc_bars, sc_symbol = "ASSET", sc_out = "fracdiff_scan.csv";
    double sc_start = 0.0, sc_stop = 1.0, sc_step = 0.05, sc_tau = 1e-5;
    int sc_maxw = 1000, sc_lags = 1;
    scan->add_option("--feature", sc_features, "feature as name:path (repeatable)");
    scan->add_option("--bars", sc_bars, "bar CSV whose closes are scanned as a feature");
    scan->add_option("--symbol", sc_symbol, "symbol name for --bars");
    scan->add_option("--grid-start", sc_start, "first d");
    scan->add_option("--grid-stop", sc_stop, "last d");
    scan->add_option("--grid-step", sc_step, "d increment");
    scan->add_option("--tau", sc_tau, "weight truncation tolerance");
    scan->add_option("--max-weights", sc_maxw, "weight window cap");
    scan->add_option("--adf-lags", sc_lags, "lagged differences in the ADF regression");
    scan->add_option("--out", sc_out, "output CSV path");

    // run
    auto* run = app.add_subcommand("run", "full approach pipeline from a config file");
    std::string run_config, run_out;
    std::int64_t run_seed = -1;
    run->add_option("--config", run_config, "config file")->required();
    run->add_option("--seed", run_seed, "master seed override");
    run->add_option("--out", run_out, "output directory override");

    // sweep
    auto* sw = app.add_subcommand("sweep", "grid of runs over config overrides");
    std::string sw_config, sw_out;
    std::int64_t sw_seed = -1;
    int sw_jobs = 1;
    std::vector<std::string> sw_params;
    sw->add_option("--config", sw_config, "base config file")->required();
    sw->add_option("--param", sw_params,
                   "axis as key=v1,v2,... (repeatable; default: the barrier-width x horizon grid)");
    sw->add_option("--seed", sw_seed, "master seed override");
    sw->add_option("--out", sw_out, "output directory override");
    sw->add_option("--jobs", sw_jobs, "parallel workers");

    // report
    auto* rep = app.add_subcommand("report", "metrics for an equity curve CSV");
    std::string rp_equity, rp_benchmark, rp_dm_a, rp_dm_b, rp_out;
    double rp_ppy = 0.0;
    rep->add_option("--equity", rp_equity, "equity CSV (timestamp,value)")->required();
    rep->add_option("--periods-per-year", rp_ppy, "annualization scale (default: inferred)");
    rep->add_option("--benchmark", rp_benchmark, "benchmark equity CSV for the IR t-test");
    rep->add_option("--dm-losses-a", rp_dm_a, "loss CSV for the DM test, strategy side");
    rep->add_option("--dm-losses-b", rp_dm_b, "loss CSV for the DM test, benchmark side");
    rep->add_option("--out", rp_out, "write the JSON report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(in_bars, in_symbol, in_resample, in_out);
        if (*label) return cmd_label(lb_bars, lb_lambda, lb_horizon, lb_hl, lb_out);
        if (*scan)
            return cmd_fracdiff_scan(sc_features, sc_bars, sc_symbol, sc_start, sc_stop, sc_step,
                                     sc_tau, sc_maxw, sc_lags, sc_out);
        if (*run) {
            RunConfig cfg = load_config(run_config);
            if (run_seed >= 0) cfg.seed = static_cast<std::uint64_t>(run_seed);
            if (!run_out.empty()) cfg.out_dir = run_out;
            const RunResult res = run_approach(cfg);
            std::cout << report_to_text("Approach " + std::to_string(cfg.approach) + " - " + cfg.symbol,
                                        res.report);
            std::cout << "outputs in " << cfg.out_dir << "\n";
            return 0;
        }
        if (*sw) {
            RunConfig cfg = load_config(sw_config);
            if (sw_seed >= 0) cfg.seed = static_cast<std::uint64_t>(sw_seed);
            if (!sw_out.empty()) cfg.out_dir = sw_out;
            SweepGrid grid;
            for (const auto& p : sw_params) {
                const auto pos = p.find('=');
                if (pos == std::string::npos)
                    throw std::invalid_argument("--param expects key=v1,v2,..., got '" + p + "'");
                grid.axes.emplace_back(p.substr(0, pos), split_csv_line(p.substr(pos + 1), ','));
            }
            if (grid.axes.empty()) {
                // default sensitivity grid: barrier width x trade horizon
                grid.axes = {{"label.lambda",
                              {"0.0005", "0.001", "0.0015", "0.002", "0.0025", "0.003"}},
                             {"label.horizon", {"5", "10", "15", "20", "30", "60"}}};
            }
            const auto cells = sweep(cfg, grid, sw_jobs);
            std::cout << cells.size() << " sweep cells -> " << cfg.out_dir << "/sweep.csv\n";
            return 0;
        }
        if (*rep) return cmd_report(rp_equity, rp_ppy, rp_benchmark, rp_dm_a, rp_dm_b, rp_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
