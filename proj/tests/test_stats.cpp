#include <doctest.h>

#include <cmath>

#include "sce/rng.hpp"
#include "sce/stats.hpp"
#include "support/oracles.hpp"

using namespace sce;

TEST_CASE("sem_ci applies the 1.96 sd/sqrt(n) formula") {
    IntervalEstimate ci = sem_ci({8, 10, 10, 12});
    double sd = std::sqrt(8.0 / 3.0);  // sample sd with n-1
    double half = 1.96 * sd / 2.0;
    CHECK(ci.point == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(ci.lo == doctest::Approx(10.0 - half).epsilon(1e-12));
    CHECK(ci.hi == doctest::Approx(10.0 + half).epsilon(1e-12));
    CHECK(ci.method == IntervalEstimate::Method::sem95);
    CHECK(ci.lo <= ci.point);
    CHECK(ci.point <= ci.hi);
}

TEST_CASE("sem_ci of a constant sample collapses to the point") {
    IntervalEstimate ci = sem_ci({4.5, 4.5, 4.5});
    CHECK(ci.point == 4.5);
    CHECK(ci.lo == 4.5);
    CHECK(ci.hi == 4.5);
    CHECK_THROWS_AS(sem_ci({1.0}), std::invalid_argument);
}

TEST_CASE("identical paired series give p = 1 and effect 0") {
    std::vector<double> a{3, 1, 4, 1, 5, 9, 2, 6};
    TestResult r = paired_permutation_test(a, a, 10000, 42);
    CHECK(r.effect == 0.0);
    CHECK(r.p_value == 1.0);
}

TEST_CASE("a constant shift of 100 over n=10 matches exact enumeration") {
    std::vector<double> a(10), b(10);
    Rng rng(17);
    for (int i = 0; i < 10; ++i) {
        b[i] = rng.uniform01();
        a[i] = b[i] + 100.0;
    }
    TestResult r = paired_permutation_test(a, b, 10000, 1);
    // only the two all-same-sign flips reach |observed| = 100
    double exact = 2.0 / 1024.0;
    CHECK(std::fabs(r.p_value - exact) < 0.02);
    CHECK(r.effect == doctest::Approx(100.0));
}

TEST_CASE("permutation p is deterministic given the seed") {
    std::vector<double> a{1, 2, 3, 4, 5, 6};
    std::vector<double> b{2, 1, 4, 3, 7, 5};
    TestResult r1 = paired_permutation_test(a, b, 10000, 9);
    TestResult r2 = paired_permutation_test(a, b, 10000, 9);
    CHECK(r1.p_value == r2.p_value);
    TestResult r3 = paired_permutation_test(a, b, 10000, 10);
    CHECK(r1.seed != r3.seed);
}

TEST_CASE("permutation p agrees with exact sign-flip enumeration") {
    Rng rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 12));
        std::vector<double> a(n), b(n), diffs(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal() * 0.5;
            diffs[i] = a[i] - b[i];
        }
        double exact = oracles::exact_signflip_p(diffs);
        TestResult mc = paired_permutation_test(a, b, 10000, trial);
        REQUIRE(std::fabs(mc.p_value - exact) <= 0.02);
    }
}

TEST_CASE("swapping the series flips the effect sign but not its size") {
    std::vector<double> a{5, 7, 2, 9, 4};
    std::vector<double> b{1, 8, 2, 4, 4};
    TestResult ab = paired_permutation_test(a, b, 4000, 3);
    TestResult ba = paired_permutation_test(b, a, 4000, 3);
    CHECK(ab.effect == -ba.effect);
    CHECK(ab.p_value == ba.p_value);
}

TEST_CASE("permutation test input validation") {
    CHECK_THROWS_AS(paired_permutation_test({1, 2}, {1}, 100, 0), std::invalid_argument);
    CHECK_THROWS_AS(paired_permutation_test({}, {}, 100, 0), std::invalid_argument);
}

TEST_CASE("bootstrap of constant equal groups is a zero-width interval at zero") {
    std::vector<double> a{10, 10, 10};
    IntervalEstimate est = bootstrap_norm_len_diff(a, a, 2000, 5);
    CHECK(est.point == 0.0);
    CHECK(est.lo == 0.0);
    CHECK(est.hi == 0.0);
    CHECK(est.method == IntervalEstimate::Method::bootstrap_percentile);
}

TEST_CASE("bootstrap of constant groups 25 and 50 is exactly 50") {
    std::vector<double> valid{25, 25, 25, 25};
    std::vector<double> invalid{50, 50};
    IntervalEstimate est = bootstrap_norm_len_diff(valid, invalid, 2000, 5);
    CHECK(est.point == 50.0);
    CHECK(est.lo == 50.0);
    CHECK(est.hi == 50.0);
}

TEST_CASE("bootstrap intervals are deterministic and ordered") {
    Rng rng(8);
    std::vector<double> valid, invalid;
    for (int i = 0; i < 30; ++i) valid.push_back(100 + 15 * rng.normal());
    for (int i = 0; i < 20; ++i) invalid.push_back(60 + 10 * rng.normal());
    IntervalEstimate a = bootstrap_norm_len_diff(valid, invalid, 3000, 77);
    IntervalEstimate b = bootstrap_norm_len_diff(valid, invalid, 3000, 77);
    IntervalEstimate c = bootstrap_norm_len_diff(valid, invalid, 3000, 78);
    CHECK(a.point == b.point);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    CHECK(a.lo <= a.hi);
    CHECK(a.lo >= 0.0);
    CHECK(a.hi <= 100.0);
    CHECK(a.lo != c.lo);  // different seed, different resamples
    CHECK_THROWS_AS(bootstrap_norm_len_diff({}, {1.0}, 10, 0), std::invalid_argument);
}

TEST_CASE("pearson recovers exact linear relationships") {
    std::vector<double> xs{1, 2, 3, 4, 5, 6, 7};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(2 * x);
    Correlation c = pearson(xs, ys);
    CHECK(c.coefficient == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.p_value < 1e-6);
}

TEST_CASE("spearman is -1 for any strictly decreasing map") {
    std::vector<double> xs{1, 2, 3, 4, 5, 6, 7};
    std::vector<double> ys{90, 70, 50, 20, 10, 5, 1};
    Correlation c = spearman(xs, ys);
    CHECK(c.coefficient == doctest::Approx(-1.0).epsilon(1e-12));
}

// Reference values computed with an independent implementation
// (scipy.stats pearsonr/spearmanr) on a frozen n=7 series shaped like the
// per-model validity/correctness comparison.
TEST_CASE("correlations match an independent reference on a frozen series") {
    std::vector<double> validity{56, 94, 82, 87, 10, 86, 78};
    std::vector<double> correctness{30, 88, 70, 69, 12, 64, 80};
    Correlation p = pearson(validity, correctness);
    Correlation s = spearman(validity, correctness);
    CHECK(p.coefficient == doctest::Approx(0.9233608327525653).epsilon(1e-9));
    CHECK(p.p_value == doctest::Approx(0.0029958010543839598).epsilon(1e-6));
    CHECK(s.coefficient == doctest::Approx(0.6785714285714287).epsilon(1e-9));
    CHECK(s.p_value == doctest::Approx(0.0937502539598313).epsilon(1e-6));
}

TEST_CASE("spearman averages ranks over ties") {
    std::vector<double> xs{1, 2, 2, 3, 4};
    auto ranks = average_ranks(xs);
    CHECK(ranks == std::vector<double>{1.0, 2.5, 2.5, 4.0, 5.0});
}

TEST_CASE("correlations are invariant under positive affine transforms") {
    std::vector<double> xs{3, 1, 4, 1.5, 5, 9, 2.6};
    std::vector<double> ys{2, 7, 1, 8, 2.8, 8, 3};
    Correlation base_p = pearson(xs, ys);
    Correlation base_s = spearman(xs, ys);
    std::vector<double> xs2;
    for (double x : xs) xs2.push_back(3.7 * x + 11.0);
    Correlation tp = pearson(xs2, ys);
    Correlation ts = spearman(xs2, ys);
    CHECK(tp.coefficient == doctest::Approx(base_p.coefficient).epsilon(1e-12));
    CHECK(ts.coefficient == doctest::Approx(base_s.coefficient).epsilon(1e-12));
}

TEST_CASE("correlation input validation") {
    CHECK_THROWS_AS(pearson({1, 2}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), std::domain_error);
    CHECK_THROWS_AS(spearman({1, 2, 3}, {5, 5, 5}), std::domain_error);
    CHECK_THROWS_AS(spearman({1, 2, 3}, {5, 5}), std::invalid_argument);
}
