#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "saelab/csv.hpp"
#include "saelab/matrix.hpp"

namespace saelab {

// Timestamps are UTC epoch seconds throughout: unambiguous arithmetic across
// market-closure gaps.
using Timestamp = std::int64_t;

namespace detail {

// Days from civil date (proleptic Gregorian), Howard Hinnant's algorithm.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline bool all_digits(const std::string& s, std::size_t from) {
    if (from >= s.size()) return false;
    for (std::size_t i = from; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

}  // namespace detail

// Accepts epoch seconds ("1577836800", possibly signed) or ISO-8601
// ("2020-01-01", "2020-01-01T09:30:00", "2020-01-01 09:30:00", optional 'Z').
inline Timestamp parse_timestamp(const std::string& raw, const std::string& context = "timestamp") {
    const std::string s = trim(raw);
    if (s.empty()) throw std::runtime_error("empty timestamp in " + context);
    if (detail::all_digits(s, s[0] == '-' || s[0] == '+' ? 1 : 0)) {
        return static_cast<Timestamp>(parse_int(s, context));
    }
    // ISO-8601: YYYY-MM-DD[( |T)HH:MM[:SS]][Z]
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char sep = 0;
    int n = 0;
    int fields = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d%n", &y, &mo, &d, &sep, &h, &mi, &sec, &n);
    if (fields < 3) throw std::runtime_error("unrecognized timestamp '" + raw + "' in " + context);
    if (fields >= 4 && sep != 'T' && sep != ' ')
        throw std::runtime_error("unrecognized timestamp '" + raw + "' in " + context);
    if (fields >= 7) {
        const std::string rest = s.substr(static_cast<std::size_t>(n));
        if (!rest.empty() && rest != "Z")
            throw std::runtime_error("unrecognized timestamp '" + raw + "' in " + context);
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 60)
        throw std::runtime_error("out-of-range timestamp '" + raw + "' in " + context);
    return detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400LL +
           h * 3600LL + mi * 60LL + sec;
}

// Timestamped OHLC(V) bars for one instrument at one frequency.
struct BarSeries {
    std::string symbol;
    std::int64_t bar_seconds = 0;  // inferred bar spacing (gcd of gaps)
    std::vector<Timestamp> timestamps;
    std::vector<double> open, high, low, close, volume;
    bool has_volume = false;

    std::size_t size() const { return timestamps.size(); }

    double frequency_minutes() const { return static_cast<double>(bar_seconds) / 60.0; }

    void validate() const {
        std::vector<std::string> bad;
        for (std::size_t i = 0; i < size(); ++i) {
            if (i > 0 && timestamps[i] <= timestamps[i - 1])
                throw std::runtime_error("timestamps not strictly increasing at index " + std::to_string(i));
            const double o = open[i], h = high[i], l = low[i], c = close[i];
            const bool positive = o > 0 && h > 0 && l > 0 && c > 0;
            const bool ordered = l <= std::min(o, c) && h >= std::max(o, c);
            if (!positive || !ordered) bad.push_back(std::to_string(timestamps[i]));
            if (has_volume && volume[i] < 0) bad.push_back(std::to_string(timestamps[i]));
        }
        if (!bad.empty()) {
            std::string msg = "OHLC invariant violated at timestamps:";
            for (const auto& t : bad) msg += " " + t;
            throw std::runtime_error(msg);
        }
    }
};

// One raw feature observation series, sorted ascending by timestamp.
struct FeatureSeries {
    std::string name;
    std::vector<Timestamp> timestamps;
    std::vector<double> values;
};

enum class AlignPolicy { ForwardFill, Drop };

// Features joined onto the traded asset's bar timestamps.
struct FeatureFrame {
    std::vector<std::string> names;
    std::vector<Timestamp> timestamps;  // subset of the bar axis
    Matrix values;                      // rows = timestamps, cols = features
};

namespace detail {

inline std::int64_t infer_bar_seconds(const std::vector<Timestamp>& ts) {
    std::int64_t g = 0;
    for (std::size_t i = 1; i < ts.size(); ++i) g = std::gcd(g, ts[i] - ts[i - 1]);
    return g;  // 0 for a single bar
}

}  // namespace detail

// Loads `timestamp,open,high,low,close[,volume]` CSV. Rows are sorted by
// timestamp; duplicate timestamps and OHLC violations are hard errors.
inline BarSeries load_bars(const std::string& path, const std::string& symbol) {
    const auto lines = read_lines(path);
    std::size_t first = 0;
    while (first < lines.size() && (lines[first].empty() || lines[first][0] == '#')) ++first;
    if (first >= lines.size()) throw std::runtime_error("empty bar file: " + path);

    const auto header = split_csv_line(lines[first]);
    const bool with_volume = header.size() == 6;
    if (!(header.size() == 5 || with_volume) || trim(header[0]) != "timestamp" ||
        trim(header[1]) != "open" || trim(header[2]) != "high" || trim(header[3]) != "low" ||
        trim(header[4]) != "close" || (with_volume && trim(header[5]) != "volume")) {
        throw std::runtime_error("bad bar CSV header in " + path +
                                 " (expected timestamp,open,high,low,close[,volume])");
    }

    struct Row {
        Timestamp ts;
        double o, h, l, c, v;
    };
    std::vector<Row> rows;
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        if (lines[i].empty() || lines[i][0] == '#') continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        const auto f = split_csv_line(lines[i]);
        if (f.size() != header.size())
            throw std::runtime_error("wrong field count at " + where);
        Row r{};
        r.ts = parse_timestamp(f[0], where);
        r.o = parse_double(f[1], where);
        r.h = parse_double(f[2], where);
        r.l = parse_double(f[3], where);
        r.c = parse_double(f[4], where);
        r.v = with_volume ? parse_double(f[5], where) : 0.0;
        rows.push_back(r);
    }
    if (rows.empty()) throw std::runtime_error("bar file has no data rows: " + path);

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].ts == rows[i - 1].ts)
            throw std::runtime_error("duplicate timestamp " + std::to_string(rows[i].ts) + " in " + path);

    BarSeries bars;
    bars.symbol = symbol;
    bars.has_volume = with_volume;
    bars.timestamps.reserve(rows.size());
    for (const Row& r : rows) {
        bars.timestamps.push_back(r.ts);
        bars.open.push_back(r.o);
        bars.high.push_back(r.h);
        bars.low.push_back(r.l);
        bars.close.push_back(r.c);
        bars.volume.push_back(r.v);
    }
    bars.bar_seconds = detail::infer_bar_seconds(bars.timestamps);
    bars.validate();
    return bars;
}

// Loads a `timestamp,value` CSV.
inline FeatureSeries load_feature_series(const std::string& path, const std::string& name) {
    const auto lines = read_lines(path);
    std::size_t first = 0;
    while (first < lines.size() && (lines[first].empty() || lines[first][0] == '#')) ++first;
    if (first >= lines.size()) throw std::runtime_error("empty feature file: " + path);
    const auto header = split_csv_line(lines[first]);
    if (header.size() != 2 || trim(header[0]) != "timestamp" || trim(header[1]) != "value")
        throw std::runtime_error("bad feature CSV header in " + path + " (expected timestamp,value)");

    FeatureSeries fs;
    fs.name = name;
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        if (lines[i].empty() || lines[i][0] == '#') continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        const auto f = split_csv_line(lines[i]);
        if (f.size() != 2) throw std::runtime_error("wrong field count at " + where);
        fs.timestamps.push_back(parse_timestamp(f[0], where));
        fs.values.push_back(parse_double(f[1], where));
    }
    if (fs.timestamps.empty()) throw std::runtime_error("feature file has no data rows: " + path);
    for (std::size_t i = 1; i < fs.timestamps.size(); ++i)
        if (fs.timestamps[i] <= fs.timestamps[i - 1])
            throw std::runtime_error("feature series not sorted ascending: " + path);
    return fs;
}

// Aggregates bars into a larger frequency. Windows are anchored to wall-clock
// boundaries (floor of timestamp over the target span); closure gaps are not
// filled, a window simply holds fewer bars. The trailing window is dropped
// unless it holds the full complement of source bars.
inline BarSeries resample(const BarSeries& bars, std::int64_t target_minutes) {
    if (target_minutes <= 0) throw std::invalid_argument("resample target must be positive");
    const std::int64_t target_seconds = target_minutes * 60;
    if (bars.bar_seconds <= 0) {
        if (bars.size() <= 1) {
            BarSeries out = bars;
            out.bar_seconds = target_seconds;
            return out;
        }
        throw std::invalid_argument("source frequency unknown");
    }
    if (target_seconds % bars.bar_seconds != 0)
        throw std::invalid_argument("resample target " + std::to_string(target_minutes) +
                                    "m is not a multiple of the source frequency " +
                                    std::to_string(bars.bar_seconds) + "s");
    const std::int64_t ratio = target_seconds / bars.bar_seconds;
    if (ratio == 1) return bars;

    BarSeries out;
    out.symbol = bars.symbol;
    out.has_volume = bars.has_volume;
    out.bar_seconds = target_seconds;

    std::size_t i = 0;
    const std::size_t n = bars.size();
    while (i < n) {
        const std::int64_t window = bars.timestamps[i] / target_seconds;
        std::size_t j = i;
        double hi = bars.high[i], lo = bars.low[i], vol = 0.0;
        while (j < n && bars.timestamps[j] / target_seconds == window) {
            hi = std::max(hi, bars.high[j]);
            lo = std::min(lo, bars.low[j]);
            vol += bars.volume[j];
            ++j;
        }
        const bool trailing = j == n;
        const bool complete = static_cast<std::int64_t>(j - i) == ratio;
        if (!trailing || complete) {
            out.timestamps.push_back(bars.timestamps[i]);
            out.open.push_back(bars.open[i]);
            out.high.push_back(hi);
            out.low.push_back(lo);
            out.close.push_back(bars.close[j - 1]);
            out.volume.push_back(vol);
        }
        i = j;
    }
    if (out.timestamps.empty())
        throw std::runtime_error("resample produced no complete windows");
    return out;
}

// Joins raw feature series onto the bar timestamp axis. ForwardFill carries
// the last observation forward (release-style series stay valid until the
// next release); Drop keeps only bar timestamps with an exact observation for
// every feature. Rows before the first observation of any feature are dropped.
inline FeatureFrame align_features(const BarSeries& bars, const std::vector<FeatureSeries>& features,
                                   AlignPolicy policy = AlignPolicy::ForwardFill) {
    if (features.empty()) throw std::invalid_argument("align_features: no features given");
    const std::size_t n = bars.size();
    for (const auto& f : features) {
        if (f.timestamps.empty())
            throw std::runtime_error("feature '" + f.name + "' is empty");
        if (f.timestamps.front() > bars.timestamps.back())
            throw std::runtime_error("feature '" + f.name + "' starts after the bar range ends");
    }

    // warm-up: first bar at or after every feature's first observation
    Timestamp warmup = std::numeric_limits<Timestamp>::min();
    for (const auto& f : features) warmup = std::max(warmup, f.timestamps.front());
    std::size_t start = 0;
    while (start < n && bars.timestamps[start] < warmup) ++start;
    if (start >= n)
        throw std::runtime_error("no bars remain after feature warm-up cutoff");

    FeatureFrame frame;
    for (const auto& f : features) frame.names.push_back(f.name);

    if (policy == AlignPolicy::ForwardFill) {
        frame.timestamps.assign(bars.timestamps.begin() + static_cast<std::ptrdiff_t>(start),
                                bars.timestamps.end());
        frame.values = Matrix(frame.timestamps.size(), features.size());
        for (std::size_t c = 0; c < features.size(); ++c) {
            const auto& f = features[c];
            std::size_t k = 0;
            for (std::size_t r = 0; r < frame.timestamps.size(); ++r) {
                const Timestamp t = frame.timestamps[r];
                while (k + 1 < f.timestamps.size() && f.timestamps[k + 1] <= t) ++k;
                frame.values(r, c) = f.values[k];
            }
        }
    } else {
        std::vector<std::size_t> keep;
        std::vector<std::vector<double>> rows;
        for (std::size_t r = start; r < n; ++r) {
            const Timestamp t = bars.timestamps[r];
            std::vector<double> row(features.size());
            bool all = true;
            for (std::size_t c = 0; c < features.size(); ++c) {
                const auto& f = features[c];
                const auto it = std::lower_bound(f.timestamps.begin(), f.timestamps.end(), t);
                if (it == f.timestamps.end() || *it != t) {
                    all = false;
                    break;
                }
                row[c] = f.values[static_cast<std::size_t>(it - f.timestamps.begin())];
            }
            if (all) {
                keep.push_back(r);
                rows.push_back(std::move(row));
            }
        }
        if (keep.empty()) throw std::runtime_error("drop-policy alignment produced no rows");
        for (std::size_t r : keep) frame.timestamps.push_back(bars.timestamps[r]);
        frame.values = Matrix::from_rows(rows);
    }
    return frame;
}

}  // namespace saelab
