#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rca/stats.hpp"

using namespace rca::stats;

namespace {

// y drives x with a one-step delay.
std::pair<std::vector<double>, std::vector<double>> coupled(std::mt19937_64 &rng, int T, double gain) {
    auto y = oracle::white_noise(rng, T);
    auto noise = oracle::white_noise(rng, T, 0.1);
    std::vector<double> x(T);
    x[0] = noise[0];
    for (int t = 1; t < T; ++t) x[t] = gain * y[t - 1] + noise[t];
    return {x, y};
}

}  // namespace

TEST_CASE("mean, stddev and z-score by hand") {
    const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(mean(v) == doctest::Approx(5.0));
    CHECK(sample_stddev(v) == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-14));
    CHECK(max_abs_zscore(v) == doctest::Approx(4.0 / std::sqrt(32.0 / 7.0)).epsilon(1e-14));

    // zeros with a single 10 at T = 20: mean 0.5, sample var = (19*0.25 + 90.25)/19 = 5
    std::vector<double> spike(20, 0.0);
    spike[7] = 10.0;
    CHECK(max_abs_zscore(spike) == doctest::Approx(9.5 / std::sqrt(5.0)).epsilon(1e-14));
    CHECK_THROWS_AS(max_abs_zscore(std::vector<double>(5, 1.0)), DegenerateSeries);
}

TEST_CASE("pearson hand values") {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{2, 4, 6, 8.1};
    // by hand: Sxy = 10.15, Sxx = 5, Syy = 20.6075
    CHECK(std::fabs(pearson(x, y) - 10.15 / std::sqrt(5.0 * 20.6075)) < 1e-12);
    CHECK(std::fabs(pearson(x, y) - oracle::pearson(x, y)) < 1e-12);
    CHECK(pearson(x, x) == doctest::Approx(1.0).epsilon(1e-15));
    std::vector<double> neg{-1, -2, -3, -4};
    CHECK(pearson(x, neg) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 1, 1, 1}), DegenerateSeries);
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), DegenerateSeries);
}

TEST_CASE("property: pearson symmetry, bounds and affine scaling") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coef(-5, 5);
    for (int i = 0; i < 300; ++i) {
        const auto x = oracle::white_noise(rng, 30);
        const auto y = oracle::white_noise(rng, 30);
        const double r = pearson(x, y);
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
        CHECK(pearson(y, x) == doctest::Approx(r).epsilon(1e-14));
        double a = coef(rng);
        if (std::fabs(a) < 1e-3) a = 1.0;
        const double b = coef(rng);
        std::vector<double> ax(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) ax[k] = a * x[k] + b;
        CHECK(std::fabs(pearson(ax, y) - (a > 0 ? r : -r)) < 1e-12);
    }
}

TEST_CASE("regularized incomplete beta agrees with boost") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ab(0.2, 60.0), xs(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double a = ab(rng), b = ab(rng), x = xs(rng);
        const double want = boost::math::ibeta(a, b, x);
        const double got = regularized_incomplete_beta(a, b, x);
        CHECK(std::fabs(got - want) <= 1e-10 * std::max(want, 1e-300) + 1e-300);
    }
    CHECK(regularized_incomplete_beta(2, 3, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2, 3, 1.0) == 1.0);
    CHECK(regularized_incomplete_beta(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("F survival agrees with boost") {
    for (double d1 : {1.0, 3.0, 7.0})
        for (double d2 : {5.0, 40.0, 190.0})
            for (double f : {0.0, 0.1, 1.0, 2.6, 10.0, 80.0}) {
                const double want = oracle::f_survival(f, d1, d2);
                CHECK(std::fabs(f_survival(f, d1, d2) - want) <= 1e-10 * want + 1e-300);
            }
}

TEST_CASE("granger matches the independent OLS/F oracle") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const int L = 1 + trial % 3;
        std::vector<double> x, y;
        if (trial % 2) {
            std::tie(x, y) = coupled(rng, 120, 0.6);
        } else {
            x = oracle::white_noise(rng, 120);
            y = oracle::white_noise(rng, 120);
        }
        const auto got = granger_test(x, y, L, 0.05);
        const auto want = oracle::granger(x, y, L);
        CHECK(got.df_num == want.df_num);
        CHECK(got.df_den == want.df_den);
        CHECK(got.f_statistic == doctest::Approx(want.f).epsilon(1e-8));
        CHECK(std::fabs(got.p_value - want.p) <= 1e-8 * want.p + 1e-300);
        CHECK(got.causes == (want.p <= 0.05));
    }
}

TEST_CASE("granger reference values from statsmodels on a closed-form series") {
    const int T = 120;
    std::vector<double> x(T), y(T);
    for (int t = 0; t < T; ++t) y[t] = std::sin(0.37 * t) + 0.3 * std::sin(2.1 * t + 0.5);
    x[0] = 0.4;
    for (int t = 1; t < T; ++t) x[t] = 0.5 * y[t - 1] + 0.4 * std::cos(1.7 * t) + 0.2 * std::sin(0.05 * t * t);
    // grangercausalitytests(..., maxlag=[3]) ssr_ftest
    const auto yx = granger_test(x, y, 3, 0.05);
    CHECK(yx.df_num == 3);
    CHECK(yx.df_den == 110);
    CHECK(yx.f_statistic == doctest::Approx(102.1347643855911).epsilon(1e-8));
    CHECK(yx.p_value == doctest::Approx(1.1577553424900981e-31).epsilon(1e-6));
    const auto xy = granger_test(y, x, 3, 0.05);
    CHECK(xy.f_statistic == doctest::Approx(37.816250517032344).epsilon(1e-8));
    CHECK(xy.p_value == doctest::Approx(7.1435583882766e-17).epsilon(1e-6));
}

TEST_CASE("granger planted coupling and white noise") {
    std::mt19937_64 rng(9);
    int false_pos = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto x = oracle::white_noise(rng, 200);
        const auto y = oracle::white_noise(rng, 200);
        false_pos += granger_test(x, y, 3, 0.05).causes;
    }
    CHECK(false_pos <= 10);

    std::mt19937_64 rng2(10);
    auto y = oracle::white_noise(rng2, 200);
    auto n = oracle::white_noise(rng2, 200);
    std::vector<double> x(200);
    x[0] = 0.1 * n[0];
    for (int t = 1; t < 200; ++t) x[t] = 0.9 * y[t - 1] + 0.1 * n[t];
    const auto r = granger_test(x, y, 3, 0.05);
    CHECK(r.causes);
    CHECK(r.p_value < 1e-10);
}

TEST_CASE("property: nesting gives RSS_r >= RSS_u and F >= 0") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 300; ++i) {
        const auto x = oracle::white_noise(rng, 40);
        auto y = (i % 3 == 0) ? x : oracle::white_noise(rng, 40);
        if (i % 3 == 0)
            for (auto &v : y) v = 2.0 * v + 1.0;  // y is an affine copy of x
        const auto r = granger_test(x, y, 1 + i % 3, 0.05);
        CHECK(r.rss_restricted >= r.rss_unrestricted);
        CHECK(r.f_statistic >= 0.0);
        CHECK(r.p_value >= 0.0);
        CHECK(r.p_value <= 1.0);
    }
}

TEST_CASE("granger preconditions and degeneracy") {
    std::mt19937_64 rng(1);
    const auto x = oracle::white_noise(rng, 20);
    CHECK_THROWS_AS(granger_test(x, std::vector<double>(20, 3.0), 2, 0.05), DegenerateSeries);
    CHECK_THROWS_AS(granger_test(x, oracle::white_noise(rng, 19), 2, 0.05), DegenerateSeries);
    CHECK_THROWS_AS(granger_test(x, oracle::white_noise(rng, 20), 7, 0.05), std::invalid_argument);

    // y's lags duplicate x's lags exactly: rank-deficient unrestricted design
    std::vector<double> y = x;
    const auto r = granger_test(x, y, 2, 0.05);
    CHECK_FALSE(r.causes);
    CHECK(r.p_value == 1.0);
    CHECK_FALSE(r.note.empty());
}
