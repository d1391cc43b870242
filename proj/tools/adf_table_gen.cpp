// Regenerates include/saelab/adf_critical_values.hpp.
//
// Simulates the Dickey-Fuller t distribution for the constant-only regression
//   dy_t = c + g*y_{t-1} + e_t,   y a driftless Gaussian random walk,
// and tabulates quantiles of t(g) over a grid of effective sample sizes.
// The fixed seed makes the table reproducible.
//
// Usage: adf_table_gen [output_path]

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "saelab/rng.hpp"

namespace {

constexpr double kProbs[] = {0.01, 0.025, 0.05, 0.10, 0.15, 0.20, 0.30, 0.40,
                             0.50, 0.60, 0.70, 0.80, 0.90, 0.95, 0.975, 0.99};
constexpr int kNumProbs = static_cast<int>(sizeof(kProbs) / sizeof(kProbs[0]));

constexpr int kSampleSizes[] = {25, 50, 100, 250, 500, 1000, 2500, 5000};
constexpr int kNumSizes = static_cast<int>(sizeof(kSampleSizes) / sizeof(kSampleSizes[0]));

// t-statistic of g in dy = c + g*y_lag (two-regressor OLS, closed form).
double df_tstat(const std::vector<double>& y) {
    const std::size_t n = y.size() - 1;
    double sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (std::size_t t = 1; t <= n; ++t) {
        const double x = y[t - 1];
        const double d = y[t] - y[t - 1];
        sx += x;
        sxx += x * x;
        sy += d;
        sxy += x * d;
    }
    const double nn = static_cast<double>(n);
    const double det = nn * sxx - sx * sx;
    const double g = (nn * sxy - sx * sy) / det;
    const double c = (sxx * sy - sx * sxy) / det;
    double sse = 0;
    for (std::size_t t = 1; t <= n; ++t) {
        const double e = (y[t] - y[t - 1]) - c - g * y[t - 1];
        sse += e * e;
    }
    const double sigma2 = sse / (nn - 2.0);
    const double se = std::sqrt(sigma2 * nn / det);
    return g / se;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string out_path = argc > 1 ? argv[1] : "include/saelab/adf_critical_values.hpp";
    saelab::Rng rng(20240525u);

    std::vector<std::vector<double>> table(kNumSizes, std::vector<double>(kNumProbs));

    for (int si = 0; si < kNumSizes; ++si) {
        const int n = kSampleSizes[si];
        const int reps = n <= 500 ? 400000 : (n <= 2500 ? 300000 : 600000);
        std::vector<double> stats(reps);
        std::vector<double> y(static_cast<std::size_t>(n) + 1);
        for (int r = 0; r < reps; ++r) {
            y[0] = 0.0;
            for (int t = 1; t <= n; ++t) y[t] = y[t - 1] + rng.normal();
            stats[r] = df_tstat(y);
        }
        std::sort(stats.begin(), stats.end());
        for (int pi = 0; pi < kNumProbs; ++pi) {
            const double idx = kProbs[pi] * (reps - 1);
            const auto lo = static_cast<std::size_t>(idx);
            const double frac = idx - static_cast<double>(lo);
            table[si][pi] = stats[lo] + frac * (stats[lo + 1] - stats[lo]);
        }
        std::fprintf(stderr, "n=%d done (%d reps), q05=%.4f\n", n, reps, table[si][2]);
    }

    std::FILE* f = std::fopen(out_path.c_str(), "w");
    if (!f) {
        std::fprintf(stderr, "cannot open %s\n", out_path.c_str());
        return 1;
    }
    std::fprintf(f, "#pragma once\n\n");
    std::fprintf(f, "// Monte Carlo quantiles of the Dickey-Fuller t distribution for the\n");
    std::fprintf(f, "// constant-only regression. Generated by tools/adf_table_gen.cpp\n");
    std::fprintf(f, "// (fixed seed 20240525); do not edit by hand.\n\n");
    std::fprintf(f, "namespace saelab::adf_tables {\n\n");
    std::fprintf(f, "inline constexpr int kNumProbs = %d;\n", kNumProbs);
    std::fprintf(f, "inline constexpr int kNumSizes = %d;\n\n", kNumSizes);
    std::fprintf(f, "inline constexpr double kProbs[kNumProbs] = {");
    for (int i = 0; i < kNumProbs; ++i) std::fprintf(f, "%s%g", i ? ", " : "", kProbs[i]);
    std::fprintf(f, "};\n\n");
    std::fprintf(f, "inline constexpr double kSampleSizes[kNumSizes] = {");
    for (int i = 0; i < kNumSizes; ++i) std::fprintf(f, "%s%d", i ? ", " : "", kSampleSizes[i]);
    std::fprintf(f, "};\n\n");
    std::fprintf(f, "// kQuantiles[size][prob]\n");
    std::fprintf(f, "inline constexpr double kQuantiles[kNumSizes][kNumProbs] = {\n");
    for (int si = 0; si < kNumSizes; ++si) {
        std::fprintf(f, "    {");
        for (int pi = 0; pi < kNumProbs; ++pi)
            std::fprintf(f, "%s%.6f", pi ? ", " : "", table[si][pi]);
        std::fprintf(f, "},\n");
    }
    std::fprintf(f, "};\n\n");
    std::fprintf(f, "}  // namespace saelab::adf_tables\n");
    std::fclose(f);
    std::fprintf(stderr, "wrote %s\n", out_path.c_str());
    return 0;
}
