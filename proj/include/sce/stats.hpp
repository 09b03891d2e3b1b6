#pragma once

#include <cstdint>
#include <vector>

namespace sce {

struct IntervalEstimate {
    enum class Method { sem95, bootstrap_percentile };
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    Method method = Method::sem95;
};

struct TestResult {
    double effect = 0.0;   // mean paired difference
    double p_value = 1.0;  // two-sided, in (0, 1]
    int resamples = 0;
    std::uint64_t seed = 0;
};

// mean +/- 1.96 * sd / sqrt(n), sample standard deviation (n-1). n >= 2.
IntervalEstimate sem_ci(const std::vector<double>& values);

// Paired sign-flip permutation test. Two-sided p compares |resampled
// mean| against |observed mean| with +1/+1 smoothing, so p is never 0 and
// identical series give exactly p = 1.
TestResult paired_permutation_test(const std::vector<double>& a, const std::vector<double>& b,
                                   int resamples = 10000, std::uint64_t seed = 0);

// Resamples both groups with replacement, recomputes the normalized
// length difference each time, and reports the bootstrap mean with the
// 2.5/97.5 percentile interval.
IntervalEstimate bootstrap_norm_len_diff(const std::vector<double>& valid_lengths,
                                         const std::vector<double>& invalid_lengths,
                                         int resamples = 10000, std::uint64_t seed = 0);

struct Correlation {
    double coefficient = 0.0;
    double p_value = 1.0;  // two-tailed via the t transform
};

// n >= 3 and neither series constant.
Correlation pearson(const std::vector<double>& xs, const std::vector<double>& ys);
// Average ranks for ties, then Pearson on the ranks.
Correlation spearman(const std::vector<double>& xs, const std::vector<double>& ys);

// Midrank assignment, exposed for reuse in tests.
std::vector<double> average_ranks(const std::vector<double>& values);

}  // namespace sce
