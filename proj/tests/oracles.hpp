// Test-side reference implementations, deliberately independent of the
// library's computation paths: plain Gauss-Jordan linear algebra, a
// discrete-event queue simulation, rescaled-range and autocorrelation
// estimators, and table-derived distribution constants.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gridshield/rng.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat make_mat(int r, int c) { return Mat(r, Vec(c, 0.0)); }

// Gauss-Jordan solve with partial pivoting.
inline Vec solve(Mat a, Vec b) {
    const int n = static_cast<int>(a.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-14) throw std::runtime_error("singular system");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        const double d = a[col][col];
        for (int c = 0; c < n; ++c) a[col][c] /= d;
        b[col] /= d;
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    return b;
}

inline Mat inverse(const Mat& a) {
    const int n = static_cast<int>(a.size());
    Mat inv = make_mat(n, n);
    for (int j = 0; j < n; ++j) {
        Vec e(n, 0.0);
        e[j] = 1.0;
        const Vec col = solve(a, e);
        for (int i = 0; i < n; ++i) inv[i][j] = col[i];
    }
    return inv;
}

// Normal-equations WLS: x = (H'WH)^-1 H'W z with W = diag(w).
inline Vec wls_normal_equations(const Mat& h, const Vec& w, const Vec& z) {
    const int d = static_cast<int>(h.size());
    const int n = static_cast<int>(h[0].size());
    Mat g = make_mat(n, n);
    Vec rhs(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < d; ++k) g[i][j] += h[k][i] * w[k] * h[k][j];
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) rhs[i] += h[k][i] * w[k] * z[k];
    return solve(g, rhs);
}

// Event-driven FIFO M/M/1: mean sojourn time over `packets` arrivals after a
// warmup prefix. Independent of the library generators except for the shared
// deterministic uniform source.
inline double mm1_mean_sojourn(double lambda, double mu, long packets,
                               std::uint64_t seed, long warmup = 2000) {
    gridshield::Rng rng(seed);
    double arrival = 0.0;
    double server_free = 0.0;
    double total = 0.0;
    long counted = 0;
    for (long i = 0; i < packets + warmup; ++i) {
        arrival += rng.exponential(lambda);
        const double start = std::max(arrival, server_free);
        const double depart = start + rng.exponential(mu);
        server_free = depart;
        if (i >= warmup) {
            total += depart - arrival;
            ++counted;
        }
    }
    return total / static_cast<double>(counted);
}

// Rescaled-range Hurst estimate: slope of log(R/S) against log(n) over a
// geometric grid of window sizes, averaging R/S over disjoint windows.
inline double rs_hurst(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> log_n, log_rs;
    for (int win = 16; win <= n / 4; win *= 2) {
        double rs_sum = 0.0;
        int count = 0;
        for (int start = 0; start + win <= n; start += win) {
            double mean = 0.0;
            for (int i = 0; i < win; ++i) mean += x[start + i];
            mean /= win;
            double cum = 0.0, mn = 0.0, mx = 0.0, var = 0.0;
            for (int i = 0; i < win; ++i) {
                cum += x[start + i] - mean;
                mn = std::min(mn, cum);
                mx = std::max(mx, cum);
                var += (x[start + i] - mean) * (x[start + i] - mean);
            }
            const double s = std::sqrt(var / win);
            if (s > 0.0) {
                rs_sum += (mx - mn) / s;
                ++count;
            }
        }
        if (count == 0) continue;
        log_n.push_back(std::log(static_cast<double>(win)));
        log_rs.push_back(std::log(rs_sum / count));
    }
    // least-squares slope
    const int m = static_cast<int>(log_n.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < m; ++i) {
        sx += log_n[i];
        sy += log_rs[i];
        sxx += log_n[i] * log_n[i];
        sxy += log_n[i] * log_rs[i];
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline double acf(const std::vector<double>& x, int lag) {
    const int n = static_cast<int>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n - lag; ++i) num += (x[i] - mean) * (x[i + lag] - mean);
    for (int i = 0; i < n; ++i) den += (x[i] - mean) * (x[i] - mean);
    return num / den;
}

// Chi-squared 95% quantiles from standard tables.
struct Chi2Row {
    int dof;
    double q95;
};
inline const std::vector<Chi2Row>& chi2_table_95() {
    static const std::vector<Chi2Row> t = {
        {10, 18.307}, {20, 31.410}, {30, 43.773}, {48, 65.171}, {100, 124.342}};
    return t;
}

}  // namespace oracle
