#include "sce/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sce/metrics.hpp"
#include "sce/rng.hpp"

namespace sce {

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Continued-fraction evaluation of the regularized incomplete beta
// function (Lentz's method), good to ~1e-10 for the t-tail use here.
double betacf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 3e-14;
    constexpr double fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

double betai(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                   b * std::log(1.0 - x);
    double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Two-tailed p for a correlation coefficient via t = r*sqrt((n-2)/(1-r^2)).
double correlation_p(double r, std::size_t n) {
    double df = static_cast<double>(n - 2);
    double r2 = r * r;
    if (r2 >= 1.0) return 0.0;
    double t2 = r2 * df / (1.0 - r2);
    return betai(df / 2.0, 0.5, df / (df + t2));
}

double pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
    double mx = mean_of(xs), my = mean_of(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw std::domain_error("correlation of a constant series");
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

void check_series(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("series length mismatch");
    if (xs.size() < 3) throw std::invalid_argument("correlation needs n >= 3");
}

// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> sorted, double q) {
    double idx = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(idx));
    std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
    double frac = idx - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

IntervalEstimate sem_ci(const std::vector<double>& values) {
    std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("sem_ci needs n >= 2");
    double m = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    double half = 1.96 * sd / std::sqrt(static_cast<double>(n));
    return {m, m - half, m + half, IntervalEstimate::Method::sem95};
}

TestResult paired_permutation_test(const std::vector<double>& a, const std::vector<double>& b,
                                   int resamples, std::uint64_t seed) {
    if (a.size() != b.size()) throw std::invalid_argument("paired series length mismatch");
    if (a.empty()) throw std::invalid_argument("paired series are empty");
    if (resamples < 1) throw std::invalid_argument("resamples must be >= 1");

    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];
    double observed = mean_of(diffs);

    Rng rng = derive_rng(seed, "paired_permutation_test");
    const double n = static_cast<double>(diffs.size());
    int at_least_as_extreme = 0;
    for (int r = 0; r < resamples; ++r) {
        double sum = 0.0;
        for (double d : diffs) sum += rng.coin_flip() ? d : -d;
        if (std::fabs(sum / n) >= std::fabs(observed)) ++at_least_as_extreme;
    }
    TestResult result;
    result.effect = observed;
    result.p_value = static_cast<double>(at_least_as_extreme + 1) / (resamples + 1);
    result.resamples = resamples;
    result.seed = seed;
    return result;
}

IntervalEstimate bootstrap_norm_len_diff(const std::vector<double>& valid_lengths,
                                         const std::vector<double>& invalid_lengths,
                                         int resamples, std::uint64_t seed) {
    if (valid_lengths.empty() || invalid_lengths.empty())
        throw std::invalid_argument("bootstrap_norm_len_diff: both groups must be non-empty");
    if (resamples < 1) throw std::invalid_argument("resamples must be >= 1");

    Rng rng = derive_rng(seed, "bootstrap_norm_len_diff");
    std::vector<double> stats(resamples);
    std::vector<double> rv(valid_lengths.size()), ri(invalid_lengths.size());
    for (int r = 0; r < resamples; ++r) {
        for (auto& v : rv) v = valid_lengths[rng.uniform_index(valid_lengths.size())];
        for (auto& v : ri) v = invalid_lengths[rng.uniform_index(invalid_lengths.size())];
        stats[r] = norm_len_diff(rv, ri);
    }
    std::sort(stats.begin(), stats.end());
    IntervalEstimate est;
    est.method = IntervalEstimate::Method::bootstrap_percentile;
    est.point = mean_of(stats);
    est.lo = quantile(stats, 0.025);
    est.hi = quantile(stats, 0.975);
    return est;
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

Correlation pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    check_series(xs, ys);
    double r = pearson_r(xs, ys);
    return {r, correlation_p(r, xs.size())};
}

Correlation spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    check_series(xs, ys);
    double rho = pearson_r(average_ranks(xs), average_ranks(ys));
    return {rho, correlation_p(rho, xs.size())};
}

}  // namespace sce
